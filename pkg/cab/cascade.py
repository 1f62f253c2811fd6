'''
Routing between edge and cloud: the confidence threshold baseline and the
conformal alignment screening selection.

Screening merges validation and test items into one pool, orders it by
predicted alignment, and removes items from the bottom until the estimated
false discovery proportion of the remaining test items is at most delta.
'''

from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from cab.domain import (
    Categorical,
    DataError,
    Example,
    InvariantViolation,
    PredictionSet,
    RiskSpec,
    meets_level,
)
from cab.predsets import oracle_set
from cab.utils import Debug

debug = Debug(__name__)


class EmptyValidation(DataError):
    pass


class EmptyTest(DataError):
    pass


class Destination:
    EDGE = 'edge'
    CLOUD = 'cloud'


class Origin:
    VALIDATION = 'validation'
    TEST = 'test'


class RouteDecision(NamedTuple):
    destination: str


class PoolItem(NamedTuple):
    example_id: str
    origin: str
    predicted_score: float
    true_score: Optional[float]
    tiebreak: float


class SelectionResult(NamedTuple):
    selected_ids: frozenset
    stop_step: int
    fdp_trajectory: Tuple[float, ...]
    threshold_score: float
    order: Tuple[PoolItem, ...]


def cbd_route(edge_dist: Categorical, gamma: float) -> RouteDecision:
    if not 0 <= gamma <= 1:
        raise InvariantViolation(f'gamma must lie in [0, 1], got {gamma}')
    if float(edge_dist.probs.max()) >= gamma:
        return RouteDecision(Destination.EDGE)
    return RouteDecision(Destination.CLOUD)


def screen_order(pool: Sequence[PoolItem]) -> List[int]:
    '''Indices of `pool` by ascending predicted score, ties by tiebreak.'''
    scores = np.array([item.predicted_score for item in pool], dtype=float)
    ties = np.array([item.tiebreak for item in pool], dtype=float)
    return [int(i) for i in np.lexsort((ties, scores))]


def fdp_estimate(
    unscreened_val_miss: int, unscreened_te: int, n_te: int, n_val: int
) -> float:
    if unscreened_te == 0:
        return 0.0
    return (n_te / (1 + n_val)) * (1 + unscreened_val_miss) / unscreened_te


def is_misaligned(true_score: float, alpha: float) -> bool:
    return not meets_level(true_score, alpha)


class ScreeningState:
    '''
    Running partition of the ordered pool. `step` items have been screened;
    the counts describe the unscreened remainder.
    '''

    def __init__(self, order: Sequence[PoolItem], alpha: float):
        self.order = tuple(order)
        self.alpha = alpha
        self.step = 0
        self.n_val = sum(1 for item in self.order if item.origin == Origin.VALIDATION)
        self.n_te = len(self.order) - self.n_val
        self.unscreened_val_miss, self.unscreened_te = self._count(0)
        self.fdp_trajectory = []

    def _count(self, step: int) -> Tuple[int, int]:
        miss = te = 0
        for item in self.order[step:]:
            if item.origin == Origin.TEST:
                te += 1
            elif is_misaligned(item.true_score, self.alpha):
                miss += 1
        return miss, te

    @property
    def done(self) -> bool:
        return self.step >= len(self.order)

    def estimate(self) -> float:
        value = fdp_estimate(
            self.unscreened_val_miss, self.unscreened_te, self.n_te, self.n_val
        )
        self.fdp_trajectory.append(value)
        return value

    def advance(self) -> PoolItem:
        item = self.order[self.step]
        if item.origin == Origin.TEST:
            self.unscreened_te -= 1
        elif is_misaligned(item.true_score, self.alpha):
            self.unscreened_val_miss -= 1
        self.step += 1
        return item

    def check(self) -> None:
        if (self.unscreened_val_miss, self.unscreened_te) != self._count(self.step):
            raise InvariantViolation(f'screening counts drifted at step {self.step}')

    def unscreened_test_ids(self) -> frozenset:
        return frozenset(
            item.example_id
            for item in self.order[self.step :]
            if item.origin == Origin.TEST
        )


def build_pool(
    val: Sequence[Tuple[str, float, float]],
    te: Sequence[Tuple[str, float]],
    rng: np.random.Generator,
) -> List[PoolItem]:
    ties = rng.random(len(val) + len(te))
    pool = [
        PoolItem(str(i), Origin.VALIDATION, float(c_hat), float(c_star), float(t))
        for (i, c_star, c_hat), t in zip(val, ties[: len(val)])
    ]
    pool.extend(
        PoolItem(str(i), Origin.TEST, float(c_hat), None, float(t))
        for (i, c_hat), t in zip(te, ties[len(val) :])
    )
    return pool


def cab_select(
    val: Sequence[Tuple[str, float, float]],
    te: Sequence[Tuple[str, float]],
    spec: RiskSpec,
    seed,
) -> SelectionResult:
    '''
    val: (id, C*, C_hat) triples; te: (id, C_hat) pairs. Returns the test
    ids left unscreened at the first step whose estimate is <= delta.
    '''
    if not val:
        raise EmptyValidation('screening needs at least one validation item')
    if not te:
        raise EmptyTest('screening needs at least one test item')
    spec.check()

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pool = build_pool(val, te, rng)
    order = [pool[i] for i in screen_order(pool)]
    state = ScreeningState(order, spec.alpha)

    while state.estimate() > spec.delta:
        state.advance()
    # the estimate is 0 once no test item remains, so the loop always ends

    if debug.enabled:
        state.check()
        debug(
            'stop_step=', state.step,
            ' selected=', state.unscreened_te,
            ' fdp_hat=', state.fdp_trajectory[-1],
        )

    if state.step:
        threshold = order[state.step - 1].predicted_score
    else:
        threshold = -np.inf
    return SelectionResult(
        selected_ids=state.unscreened_test_ids(),
        stop_step=state.step,
        fdp_trajectory=tuple(state.fdp_trajectory),
        threshold_score=float(threshold),
        order=state.order,
    )


def reveal_test_alignments(
    order: Sequence[PoolItem], truth: Dict[str, float]
) -> Tuple[PoolItem, ...]:
    '''Diagnostic copy of the ordered pool with held-out C* on test items.'''
    return tuple(
        item._replace(true_score=truth[item.example_id])
        if item.origin == Origin.TEST and item.example_id in truth
        else item
        for item in order
    )


def assemble_prediction(
    example: Example, selected: bool, edge_set: PredictionSet, alpha: float
) -> PredictionSet:
    if selected:
        return edge_set
    return oracle_set(example.cloud_dist, alpha)
