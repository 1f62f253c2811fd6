'''
True alignment score C*(x), the edge-side feature it is predicted from, and
a monotone step-function predictor fitted by pool-adjacent-violators.
'''

import json
import math
from typing import List, NamedTuple, Sequence

import numpy as np

from cab.domain import (
    Categorical,
    DataError,
    DimensionMismatch,
    InvariantViolation,
    PredictionSet,
)
from cab.utils import Debug, clamp

debug = Debug(__name__)


class EmptyTrainingSet(DataError):
    pass


class FeatureOutOfRange(InvariantViolation):
    pass


class AlignmentSample(NamedTuple):
    example_id: str
    feature: float
    target: float


def _set_mass(dist: Categorical, edge_set: PredictionSet) -> float:
    if edge_set.members and edge_set.members[-1] >= dist.num_labels:
        raise DimensionMismatch(
            f'set member {edge_set.members[-1]} outside K={dist.num_labels}'
        )
    return clamp(dist.mass(edge_set))


def true_alignment(cloud_dist: Categorical, edge_set: PredictionSet) -> float:
    return _set_mass(cloud_dist, edge_set)


def edge_coverage_feature(edge_dist: Categorical, edge_set: PredictionSet) -> float:
    return _set_mass(edge_dist, edge_set)


class _Block:
    '''Contiguous run of knots pooled to one value.'''

    def __init__(self, start: int, total: float, weight: float):
        self.start = start
        self.end = start + 1
        self.total = total
        self.weight = weight

    def merge_with_next_block(self, right: '_Block') -> None:
        assert self.end == right.start
        self.total += right.total
        self.weight += right.weight
        self.end = right.end

    def value(self) -> float:
        return self.total / self.weight


def _pool_adjacent_violators(targets: np.ndarray, weights: np.ndarray) -> np.ndarray:
    blocks = [_Block(0, targets[0] * weights[0], weights[0])]
    for index in range(1, targets.size):
        cur = _Block(index, targets[index] * weights[index], weights[index])
        while blocks and blocks[-1].value() > cur.value():
            prev = blocks.pop()
            prev.merge_with_next_block(cur)
            cur = prev
        blocks.append(cur)

    fitted = np.empty(targets.size)
    for block in blocks:
        fitted[block.start : block.end] = block.value()
    return fitted


class AlignmentPredictor:
    '''
    Nondecreasing step function through (feature, value) knots.

    A query between two knots takes the left knot's value; below the first
    knot it takes the first value.
    '''

    def __init__(self, features: Sequence[float], values: Sequence[float]):
        features = np.asarray(features, dtype=float)
        values = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
        if features.size == 0 or features.shape != values.shape:
            raise DataError('predictor needs matching, non-empty knot lists')
        if np.any(np.diff(features) <= 0):
            raise DataError('knot features must be strictly increasing')
        if np.any(np.diff(values) < 0):
            raise DataError('knot values must be nondecreasing')
        self.features = features
        self.values = values

    @classmethod
    def constant(cls, value: float) -> 'AlignmentPredictor':
        return cls([0.0], [value])

    @property
    def knots(self) -> List[List[float]]:
        return [[float(f), float(v)] for f, v in zip(self.features, self.values)]

    def predict(self, feature: float) -> float:
        if not 0.0 <= feature <= 1.0:
            raise FeatureOutOfRange(f'feature {feature} outside [0, 1]')
        idx = int(np.searchsorted(self.features, feature, side='right')) - 1
        return float(self.values[max(idx, 0)])

    def predict_many(self, features: Sequence[float]) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if np.any((features < 0.0) | (features > 1.0)) or np.any(np.isnan(features)):
            raise FeatureOutOfRange('feature outside [0, 1]')
        idx = np.searchsorted(self.features, features, side='right') - 1
        return self.values[np.maximum(idx, 0)]

    def to_json(self) -> str:
        return json.dumps({'knots': self.knots})

    @classmethod
    def from_json(cls, text: str) -> 'AlignmentPredictor':
        try:
            knots = json.loads(text)['knots']
            features = [float(f) for f, _ in knots]
            values = [float(v) for _, v in knots]
        except (ValueError, KeyError, TypeError) as err:
            raise DataError(f'malformed predictor document: {err}') from err
        return cls(features, values)

    def __repr__(self) -> str:
        return f'AlignmentPredictor(knots={len(self.features)})'


def fit_predictor(train: Sequence[AlignmentSample]) -> AlignmentPredictor:
    '''Isotonic least-squares fit of target on feature.'''
    if not train:
        raise EmptyTrainingSet('alignment predictor needs at least one sample')

    features = np.array([s.feature for s in train], dtype=float)
    targets = np.array([s.target for s in train], dtype=float)
    if not (np.all(np.isfinite(features)) and np.all(np.isfinite(targets))):
        raise DataError('non-finite alignment sample')

    # pool repeated features first, weighted by multiplicity
    knots, inverse, counts = np.unique(features, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=targets)
    fitted = _pool_adjacent_violators(sums / counts, counts.astype(float))

    if debug.enabled:
        debug('fit on ', len(train), ' samples, ', knots.size, ' knots')
    return AlignmentPredictor(knots, fitted)


def predict_alignment(predictor: AlignmentPredictor, feature: float) -> float:
    if math.isnan(feature):
        raise FeatureOutOfRange('feature is NaN')
    return predictor.predict(feature)
