'''
Evaluation quantities for one trial and their aggregation over trials.
'''

import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from cab.cascade import Origin, PoolItem, is_misaligned
from cab.domain import DataError, InvariantViolation, PredictionSet, check_alpha
from cab.utils import Debug

debug = Debug(__name__)


class LengthMismatch(DataError):
    pass


class EmptyOracleSet(InvariantViolation):
    pass


class MissingTrueAlignment(DataError):
    pass


class TrialMetrics(NamedTuple):
    satisfaction_rate: float
    deferral_rate: float
    normalized_inefficiency: float
    fdp: float
    marginal_coverage: Optional[float]
    n_selected: int
    empty_selection: bool


METRIC_FIELDS = (
    'satisfaction_rate',
    'deferral_rate',
    'normalized_inefficiency',
    'fdp',
    'marginal_coverage',
    'n_selected',
    'empty_selection',
)


class ReliabilityDiagram(NamedTuple):
    bin_edges: Tuple[float, ...]
    confidence_mean: Tuple[float, ...]
    accuracy: Tuple[float, ...]
    count: Tuple[int, ...]


def _check_lengths(a: Sequence, b: Sequence) -> None:
    if len(a) != len(b):
        raise LengthMismatch(f'lengths differ: {len(a)} != {len(b)}')


def fdp(selected_true_alignments: Sequence[float], alpha: float) -> float:
    check_alpha(alpha)
    n = len(selected_true_alignments)
    if n == 0:
        return 0.0
    misses = sum(1 for c in selected_true_alignments if is_misaligned(c, alpha))
    return misses / n


def satisfaction_rate(selected_true_alignments: Sequence[float], alpha: float) -> float:
    # 0/0 = 0: an empty selection satisfies nothing
    if len(selected_true_alignments) == 0:
        check_alpha(alpha)
        return 0.0
    return 1.0 - fdp(selected_true_alignments, alpha)


def deferral_rate(n_selected: int, n_test: int) -> float:
    if n_test < 1 or not 0 <= n_selected <= n_test:
        raise InvariantViolation(f'{n_selected} selected out of {n_test} test inputs')
    return 1.0 - n_selected / n_test


def normalized_inefficiency(
    final_sets: Sequence[PredictionSet], oracle_sets: Sequence[PredictionSet]
) -> float:
    _check_lengths(final_sets, oracle_sets)
    if not final_sets:
        raise LengthMismatch('no prediction sets')
    ratios = []
    for final, oracle in zip(final_sets, oracle_sets):
        if len(oracle) == 0:
            raise EmptyOracleSet('cloud oracle set is empty')
        ratios.append(len(final) / len(oracle))
    return math.fsum(ratios) / len(ratios)


def marginal_coverage(sets: Sequence[PredictionSet], labels: Sequence[int]) -> float:
    _check_lengths(sets, labels)
    if not sets:
        raise LengthMismatch('no prediction sets')
    return sum(1 for s, y in zip(sets, labels) if y in s) / len(sets)


def reliability_diagram(
    confidences: Sequence[float], correct: Sequence[bool], n_bins: int = 10
) -> ReliabilityDiagram:
    '''
    Equal-width bins over [0, 1], right-closed; confidence 0.0 falls in the
    first bin. Empty bins carry count 0 and NaN means.
    '''
    _check_lengths(confidences, correct)
    if n_bins < 1:
        raise DataError(f'need at least one bin, got {n_bins}')
    conf = np.asarray(confidences, dtype=float)
    if np.any(np.isnan(conf)) or np.any((conf < 0.0) | (conf > 1.0)):
        raise DataError('confidences must lie in [0, 1]')
    hits = np.asarray(correct, dtype=float)
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    idx = np.clip(np.searchsorted(edges, conf, side='left') - 1, 0, n_bins - 1)

    count = np.bincount(idx, minlength=n_bins)
    conf_sum = np.bincount(idx, weights=conf, minlength=n_bins)
    hit_sum = np.bincount(idx, weights=hits, minlength=n_bins)
    with np.errstate(invalid='ignore', divide='ignore'):
        conf_mean = np.where(count > 0, conf_sum / count, np.nan)
        accuracy = np.where(count > 0, hit_sum / count, np.nan)

    return ReliabilityDiagram(
        bin_edges=tuple(float(e) for e in edges),
        confidence_mean=tuple(float(c) for c in conf_mean),
        accuracy=tuple(float(a) for a in accuracy),
        count=tuple(int(c) for c in count),
    )


def martingale_trajectory(order: Sequence[PoolItem], alpha: float) -> List[float]:
    '''
    M(l) = misaligned unscreened test items / (1 + misaligned unscreened
    validation items), for l = 0 .. len(order).
    '''
    check_alpha(alpha)
    flags = []
    for item in order:
        if item.true_score is None:
            raise MissingTrueAlignment(f'{item.example_id} has no true alignment')
        flags.append((item.origin == Origin.TEST, is_misaligned(item.true_score, alpha)))

    te_miss = sum(1 for is_te, miss in flags if is_te and miss)
    val_miss = sum(1 for is_te, miss in flags if not is_te and miss)
    trajectory = [te_miss / (1 + val_miss)]
    for is_te, miss in flags:
        if miss:
            if is_te:
                te_miss -= 1
            else:
                val_miss -= 1
        trajectory.append(te_miss / (1 + val_miss))
    return trajectory


def stopped_value(trajectory: Sequence[float], stop_step: int) -> float:
    return trajectory[min(stop_step, len(trajectory) - 1)]


def summarize(values: Sequence[float]) -> Tuple[float, float]:
    '''Mean and standard error; SE is 0 for fewer than two values.'''
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def aggregate(trials: Sequence[TrialMetrics]) -> Dict[str, float]:
    '''
    Mean and SE of every metric, plus the empty-selection rate and the
    satisfaction rate over non-empty selections only.
    '''
    out = {'n_trials': len(trials)}
    for name in METRIC_FIELDS:
        mean, se = summarize([_as_float(getattr(t, name)) for t in trials])
        out[f'{name}_mean'] = mean
        out[f'{name}_se'] = se

    nonempty = [t.satisfaction_rate for t in trials if not t.empty_selection]
    mean, se = summarize(nonempty)
    out['satisfaction_rate_nonempty_mean'] = mean
    out['satisfaction_rate_nonempty_se'] = se
    return out


def _as_float(value) -> Optional[float]:
    if value is None:
        return None
    return float(value)
