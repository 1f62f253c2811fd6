'''
Edge prediction sets (highest mass, split conformal, localized conformal)
and the cloud oracle set.

Scores are negative log-probabilities under the edge model. Quantiles are
taken over weighted point masses with an extra mass at +inf and always
return one of the input values verbatim.
'''

import math
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from cab.domain import (
    MASS_EPS,
    Categorical,
    ConfigError,
    DataError,
    DimensionMismatch,
    Example,
    LabelOutOfRange,
    PredictionSet,
    check_alpha,
    meets_level,
)
from cab.utils import Debug

debug = Debug(__name__)

class EmptyInput(DataError):
    pass


class EmptyFeatureSpace(DataError):
    pass


class InvalidLevel(ConfigError):
    pass


class InvalidKernel(ConfigError):
    pass


class WeightedPoint(NamedTuple):
    value: float
    weight: float


class KernelKind:
    GAUSSIAN = 'gaussian'
    CONSTANT = 'constant'


class KernelSpec(NamedTuple):
    kind: str = KernelKind.GAUSSIAN
    bandwidth: float = 1.0

    def check(self) -> 'KernelSpec':
        if self.kind not in (KernelKind.GAUSSIAN, KernelKind.CONSTANT):
            raise InvalidKernel(f'unknown kernel {self.kind!r}')
        if self.kind == KernelKind.GAUSSIAN and not self.bandwidth > 0:
            raise InvalidKernel(f'gaussian bandwidth must be > 0, got {self.bandwidth}')
        return self


def hms(dist: Categorical, alpha: float) -> PredictionSet:
    '''
    Smallest set with mass >= 1 - alpha. Labels are taken by descending
    probability, ties by ascending index.
    '''
    check_alpha(alpha)
    probs = dist.probs
    order = np.lexsort((np.arange(probs.size), -probs))
    if alpha == 0:
        # mass 1 exactly: every label with positive probability
        return PredictionSet(order[: int(np.count_nonzero(probs))], probs.size)

    cum = np.cumsum(probs[order])
    k = min(int(np.searchsorted(cum >= (1.0 - alpha) - MASS_EPS, True)) + 1, probs.size)
    # settle k on the exact mass that scoring uses, cumsum may round either way
    while k < probs.size and not meets_level(dist.mass(order[:k]), alpha):
        k += 1
    while k > 1 and meets_level(dist.mass(order[: k - 1]), alpha):
        k -= 1
    return PredictionSet(order[:k], probs.size)


def nll_score(edge_dist: Categorical, label: int) -> float:
    if not 0 <= label < edge_dist.num_labels:
        raise LabelOutOfRange(f'label {label} outside K={edge_dist.num_labels}')
    # must agree bitwise with nll_scores
    return float(nll_scores(edge_dist)[label])


def nll_scores(edge_dist: Categorical) -> np.ndarray:
    with np.errstate(divide='ignore'):
        return 0.0 - np.log(edge_dist.probs)


def _quantile_sorted(values: np.ndarray, cum: np.ndarray, level: float) -> float:
    # values ascending, cum the running weight; first index meeting the level
    target = level * cum[-1]
    idx = int(np.searchsorted(cum >= target - MASS_EPS * cum[-1], True))
    return float(values[min(idx, values.size - 1)])


def _weighted_quantile(values: np.ndarray, weights: np.ndarray, level: float) -> float:
    if not 0 <= level <= 1:
        raise InvalidLevel(f'quantile level must lie in [0, 1], got {level}')
    if values.size == 0:
        raise EmptyInput('no points to take a quantile of')
    if np.any(np.isnan(values)):
        raise DataError('NaN score')
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise DataError('weights must be finite and non-negative')
    if not weights.sum() > 0:
        raise EmptyInput('total weight is zero')
    order = np.argsort(values, kind='stable')
    return _quantile_sorted(values[order], np.cumsum(weights[order]), level)


def weighted_quantile(points: Sequence[WeightedPoint], level: float) -> float:
    '''
    Smallest value v whose cumulative normalized weight reaches `level`.
    '''
    if not points:
        raise EmptyInput('no points to take a quantile of')
    values = np.array([p.value for p in points], dtype=float)
    weights = np.array([p.weight for p in points], dtype=float)
    return _weighted_quantile(values, weights, level)


def _with_infinity(cal_scores: Sequence[float]) -> np.ndarray:
    return np.append(np.asarray(cal_scores, dtype=float), math.inf)


def cp_threshold(cal_scores: Sequence[float], alpha: float) -> float:
    check_alpha(alpha)
    values = _with_infinity(cal_scores)
    # unit weights; the quantile is invariant to the 1/(n+1) rescaling
    return _weighted_quantile(values, np.ones(values.size), 1.0 - alpha)


def threshold_set(edge_dist: Categorical, threshold: float) -> PredictionSet:
    scores = nll_scores(edge_dist)
    return PredictionSet(np.flatnonzero(scores <= threshold), edge_dist.num_labels)


def kernel_eval(spec: KernelSpec, x1: Sequence[float], x2: Sequence[float]) -> float:
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise DimensionMismatch(f'kernel inputs of shape {x1.shape} and {x2.shape}')
    if spec.kind == KernelKind.CONSTANT:
        return 1.0
    diff = x1 - x2
    return math.exp(-float(diff @ diff) / (2.0 * spec.bandwidth**2))


def _gaussian_weights(
    features: np.ndarray, center: np.ndarray, bandwidth: float
) -> np.ndarray:
    diff = features - center
    return np.exp(-np.einsum('ij,ij->i', diff, diff) / (2.0 * bandwidth**2))


class LocalizedQuantile:
    '''
    Kernel-weighted conformal threshold with the calibration set sorted once.

    For each query x a perturbation x~ ~ H(x, .) is drawn; calibration points
    get weight H(x_i, x~) and the mass at +inf gets H(x, x~).
    '''

    def __init__(
        self,
        cal_features: np.ndarray,
        cal_scores: Sequence[float],
        spec: KernelSpec,
    ):
        self.spec = spec.check()
        scores = np.asarray(cal_scores, dtype=float)
        if np.any(np.isnan(scores)):
            raise DataError('NaN calibration score')
        order = np.argsort(scores, kind='stable')
        self.values = np.append(scores[order], math.inf)

        if spec.kind == KernelKind.GAUSSIAN:
            cal_features = np.asarray(cal_features, dtype=float)
            if scores.size:
                if cal_features.ndim != 2 or cal_features.shape[0] != scores.size:
                    raise DimensionMismatch(
                        f'{scores.size} scores but features of shape {cal_features.shape}'
                    )
                if cal_features.shape[1] == 0:
                    raise EmptyFeatureSpace('gaussian kernel needs d > 0 features')
                self.features = cal_features[order]
            else:
                self.features = np.zeros((0, 0))
        else:
            self.features = None

    def weights(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = self.values.size - 1
        if self.spec.kind == KernelKind.CONSTANT:
            return np.ones(n + 1)

        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise EmptyFeatureSpace('gaussian kernel needs d > 0 features')
        if n and self.features.shape[1] != x.size:
            raise DimensionMismatch(
                f'query has d={x.size}, calibration has d={self.features.shape[1]}'
            )
        h = self.spec.bandwidth
        x_tilde = x + h * rng.standard_normal(x.size)
        cal = _gaussian_weights(self.features, x_tilde, h) if n else np.zeros(0)
        own = _gaussian_weights(x[None, :], x_tilde, h)
        return np.append(cal, own)

    def threshold(self, x: np.ndarray, alpha: float, rng: np.random.Generator) -> float:
        check_alpha(alpha)
        w = self.weights(x, rng)
        if not w.sum() > 0:
            # every kernel value underflowed; only the +inf mass is informative
            return math.inf
        return _quantile_sorted(self.values, np.cumsum(w), 1.0 - alpha)


def lcp_threshold(
    test: Example,
    cal: List[Tuple[Example, float]],
    alpha: float,
    spec: KernelSpec,
    rng: np.random.Generator,
) -> float:
    if spec.kind == KernelKind.GAUSSIAN:
        if test.features.size == 0:
            raise EmptyFeatureSpace(f'{test.id}: gaussian kernel needs d > 0 features')
        for example, _ in cal:
            if example.features.shape != test.features.shape:
                raise DimensionMismatch(
                    f'{example.id}: d={example.features.size}, test has d={test.features.size}'
                )
        features = np.array([example.features for example, _ in cal], dtype=float)
    else:
        features = None
    lq = LocalizedQuantile(features, [score for _, score in cal], spec)
    return lq.threshold(test.features, alpha, rng)


def suggest_bandwidth(
    cal_features: np.ndarray,
    query_features: np.ndarray,
    ratio: float = 10.0,
) -> float:
    '''
    Bandwidth h at which the median ratio between the kernel weight of the
    nearest and the farthest calibration point equals `ratio`.
    '''
    cal_features = np.asarray(cal_features, dtype=float)
    query_features = np.asarray(query_features, dtype=float)
    if cal_features.ndim != 2 or cal_features.shape[1] == 0:
        raise EmptyFeatureSpace('bandwidth search needs d > 0 features')
    if cal_features.shape[0] < 2 or query_features.shape[0] == 0:
        raise EmptyInput('bandwidth search needs >= 2 calibration and >= 1 query points')
    if not ratio > 1:
        raise InvalidKernel(f'weight ratio must exceed 1, got {ratio}')

    sq = (
        np.sum(query_features**2, axis=1)[:, None]
        - 2.0 * query_features @ cal_features.T
        + np.sum(cal_features**2, axis=1)[None, :]
    )
    sq = np.maximum(sq, 0.0)
    spread = float(np.median(sq.max(axis=1) - sq.min(axis=1)))
    if spread <= 0:
        return 1.0
    h = math.sqrt(spread / (2.0 * math.log(ratio)))
    if debug.enabled:
        debug('suggested bandwidth=', h, ' ratio=', ratio)
    return h


def oracle_set(cloud_dist: Categorical, alpha: float) -> PredictionSet:
    return hms(cloud_dist, alpha)
