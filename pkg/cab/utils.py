import os
import sys
import time
from typing import Optional


def clamp(x: float, bottom: float = 0.0, top: float = 1.0) -> float:
    return min(max(bottom, x), top)


def ticks_ms() -> int:
    return time.monotonic_ns() // 1_000_000


_debug_enabled = None


class Debug:
    '''default usage:
    debug = Debug(__name__)
    '''

    def __init__(self, name: str = __name__):
        self.name = name

    def __call__(self, *message, name: Optional[str] = None) -> None:
        if not name:
            name = self.name
        print(ticks_ms(), end=' ', file=sys.stderr)
        print(name, end=': ', file=sys.stderr)
        print(*message, sep='', file=sys.stderr)

    @property
    def enabled(self) -> bool:
        global _debug_enabled
        if _debug_enabled is None:
            return os.environ.get('CAB_DEBUG', '') not in ('', '0')
        return bool(_debug_enabled)

    @enabled.setter
    def enabled(self, enabled: bool):
        global _debug_enabled
        _debug_enabled = enabled
        self('debug.enabled=', enabled)
