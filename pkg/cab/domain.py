'''
Value types shared by every other module: label spaces, categorical
distributions, examples, risk levels, prediction sets and data partitions.

All values are immutable once built. Distributions are dense numpy vectors
marked read-only.
'''

import math
import warnings
from typing import Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from cab.utils import Debug

debug = Debug(__name__)

# Mass-sum tolerances: within SUM_TOL a vector is taken as-is, within
# RENORM_TOL it is renormalized with a warning, beyond that it is rejected.
SUM_TOL = 1e-9
RENORM_TOL = 1e-6

# Slack on coverage-level comparisons, absorbs summation rounding only.
MASS_EPS = 1e-12


class CabError(Exception):
    exit_code = 3


class ConfigError(CabError):
    exit_code = 1


class DataError(CabError):
    exit_code = 2


class InvariantViolation(CabError):
    exit_code = 3


class DimensionMismatch(DataError):
    pass


class NotADistribution(DataError):
    pass


class LabelOutOfRange(DataError):
    pass


class InvalidAlpha(ConfigError):
    pass


class RenormalizedWarning(UserWarning):
    pass


class LabelSpace(NamedTuple):
    num_labels: int

    def check(self) -> 'LabelSpace':
        if self.num_labels < 2:
            raise DimensionMismatch(f'label space needs K >= 2, got {self.num_labels}')
        return self

    def full_set(self) -> 'PredictionSet':
        return PredictionSet(range(self.num_labels), self.num_labels)


class Categorical:
    '''
    Probability vector over labels 0..K-1.

    Vectors whose mass is off by more than SUM_TOL but at most RENORM_TOL are
    renormalized and a RenormalizedWarning is issued; anything worse raises
    NotADistribution.
    '''

    __slots__ = ('probs',)

    def __init__(self, probs: Iterable[float]):
        probs = np.array(probs, dtype=float)
        if probs.ndim != 1 or probs.size < 2:
            raise NotADistribution(f'expected a vector of K >= 2 probabilities, got shape {probs.shape}')
        if not np.all(np.isfinite(probs)):
            raise NotADistribution('probabilities must be finite')
        if np.any(probs < 0):
            raise NotADistribution(f'negative probability {probs.min()}')

        total = math.fsum(probs)
        error = abs(total - 1.0)
        if error > RENORM_TOL:
            raise NotADistribution(f'probabilities sum to {total}')
        if error > SUM_TOL:
            warnings.warn(
                f'probabilities summing to {total!r} were renormalized',
                RenormalizedWarning,
                stacklevel=2,
            )
            if debug.enabled:
                debug('renormalized, sum=', total)
            probs = probs / total

        probs.flags.writeable = False
        self.probs = probs

    @property
    def num_labels(self) -> int:
        return self.probs.size

    def mass(self, labels: Iterable[int]) -> float:
        idx = np.fromiter(labels, dtype=int)
        if idx.size == 0:
            return 0.0
        return min(1.0, math.fsum(self.probs[idx]))

    def __getitem__(self, label: int) -> float:
        return float(self.probs[label])

    def __eq__(self, other) -> bool:
        return isinstance(other, Categorical) and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())

    def __repr__(self) -> str:
        return f'Categorical({self.probs.tolist()})'


class PredictionSet:
    '''Sorted, duplicate-free tuple of label indices.'''

    __slots__ = ('members',)

    def __init__(self, members: Iterable[int] = (), num_labels: Optional[int] = None):
        members = tuple(sorted({int(m) for m in members}))
        if members and members[0] < 0:
            raise LabelOutOfRange(f'negative label {members[0]}')
        if num_labels is not None and members and members[-1] >= num_labels:
            raise LabelOutOfRange(f'label {members[-1]} outside K={num_labels}')
        self.members = members

    def mask(self, num_labels: int) -> np.ndarray:
        m = np.zeros(num_labels, dtype=bool)
        m[list(self.members)] = True
        return m

    def issubset(self, other: 'PredictionSet') -> bool:
        return set(self.members) <= set(other.members)

    def __contains__(self, label) -> bool:
        return label in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __eq__(self, other) -> bool:
        return isinstance(other, PredictionSet) and self.members == other.members

    def __hash__(self) -> int:
        return hash(self.members)

    def __repr__(self) -> str:
        return f'PredictionSet({list(self.members)})'


class Example(NamedTuple):
    id: str
    features: np.ndarray
    cloud_dist: Categorical
    edge_dist: Categorical
    label: Optional[int] = None

    @property
    def num_labels(self) -> int:
        return self.cloud_dist.num_labels


def make_example(
    id: str,
    cloud_probs: Sequence[float],
    edge_probs: Sequence[float],
    label: Optional[int] = None,
    features: Optional[Sequence[float]] = None,
) -> Example:
    if features is None:
        features = ()
    features = np.array(features, dtype=float).reshape(-1)
    features.flags.writeable = False
    example = Example(
        id=str(id),
        features=features,
        cloud_dist=Categorical(cloud_probs),
        edge_dist=Categorical(edge_probs),
        label=None if label is None else int(label),
    )
    validate_example(example)
    return example


def validate_example(example: Example) -> None:
    cloud, edge = example.cloud_dist, example.edge_dist
    if cloud.num_labels != edge.num_labels:
        raise DimensionMismatch(
            f'{example.id}: cloud has K={cloud.num_labels}, edge has K={edge.num_labels}'
        )
    for dist in (cloud, edge):
        total = math.fsum(dist.probs)
        if np.any(dist.probs < 0) or abs(total - 1.0) > SUM_TOL:
            raise NotADistribution(f'{example.id}: probabilities sum to {total}')
    if example.label is not None and not 0 <= example.label < cloud.num_labels:
        raise LabelOutOfRange(f'{example.id}: label {example.label} outside K={cloud.num_labels}')
    if example.features.ndim != 1 or not np.all(np.isfinite(example.features)):
        raise DimensionMismatch(f'{example.id}: features must be a finite vector')


def check_alpha(alpha: float) -> float:
    if not 0 <= alpha < 1:
        raise InvalidAlpha(f'alpha must lie in [0, 1), got {alpha}')
    return alpha


def meets_level(mass: float, alpha: float) -> bool:
    '''Coverage test shared by HMS sizing and misalignment scoring.'''
    return mass >= 1.0 - alpha - MASS_EPS


class RiskSpec(NamedTuple):
    alpha: float
    delta: float

    def check(self) -> 'RiskSpec':
        check_alpha(self.alpha)
        if not 0 < self.delta < 1:
            raise InvalidAlpha(f'delta must lie in (0, 1), got {self.delta}')
        return self


class PartitionSizes(NamedTuple):
    cal: int = 500
    tr: int = 200
    val: int = 500
    te: int = 100

    @property
    def total(self) -> int:
        return self.cal + self.tr + self.val + self.te


class DataPartition(NamedTuple):
    cal: Tuple[int, ...]
    tr: Tuple[int, ...]
    val: Tuple[int, ...]
    te: Tuple[int, ...]

    def is_disjoint(self) -> bool:
        parts = [set(p) for p in self]
        return all(
            not parts[i] & parts[j]
            for i in range(len(parts))
            for j in range(i + 1, len(parts))
        )


def random_partition(
    pool_size: int, sizes: PartitionSizes, rng: np.random.Generator
) -> DataPartition:
    if sizes.total > pool_size:
        raise ConfigError(f'partition needs {sizes.total} examples, pool has {pool_size}')
    perm = rng.permutation(pool_size)
    bounds = np.cumsum([0, sizes.cal, sizes.tr, sizes.val, sizes.te])
    return DataPartition(
        *(tuple(int(i) for i in perm[lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:]))
    )
