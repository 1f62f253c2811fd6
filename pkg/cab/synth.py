'''
Synthetic cloud/edge populations.

Cloud distributions are Dirichlet draws and labels are sampled from them, so
the cloud distribution is the true conditional law. The edge distribution is
a tempered, noisy copy: temperature < 1 makes it over-confident, > 1
under-confident.
'''

from typing import List, NamedTuple, Optional

import numpy as np

from cab.domain import (
    Categorical,
    ConfigError,
    Example,
    PartitionSizes,
    validate_example,
)
from cab.utils import Debug

debug = Debug(__name__)

# floor applied before taking logs for features
_LOG_FLOOR = 1e-12


class InvalidTemperature(ConfigError):
    pass


class SynthConfig(NamedTuple):
    num_labels: int = 10
    feature_dim: Optional[int] = None
    dirichlet_concentration: float = 0.3
    edge_temperature: float = 0.5
    edge_noise: float = 0.0
    pool_size: int = 1400
    seed: int = 0

    @property
    def dim(self) -> int:
        return self.num_labels if self.feature_dim is None else self.feature_dim

    def check(self, sizes: Optional[PartitionSizes] = None) -> 'SynthConfig':
        if self.num_labels < 2:
            raise ConfigError(f'num_labels must be >= 2, got {self.num_labels}')
        if self.dim < 0:
            raise ConfigError(f'feature_dim must be >= 0, got {self.feature_dim}')
        if not self.dirichlet_concentration > 0:
            raise ConfigError('dirichlet_concentration must be > 0')
        if not self.edge_temperature > 0:
            raise InvalidTemperature(f'temperature must be > 0, got {self.edge_temperature}')
        if not self.edge_noise >= 0:
            raise ConfigError('edge_noise must be >= 0')
        if sizes is not None and self.pool_size < sizes.total:
            raise ConfigError(
                f'pool_size {self.pool_size} is smaller than the partition ({sizes.total})'
            )
        return self


def _temper(probs: np.ndarray, T: float, eps: np.ndarray) -> np.ndarray:
    # rows of probs; zero-probability labels stay at zero
    with np.errstate(divide='ignore'):
        logits = (np.log(probs) + eps) / T
    logits -= logits.max(axis=-1, keepdims=True)
    weights = np.exp(logits)
    return weights / weights.sum(axis=-1, keepdims=True)


def temperature_distort(
    cloud: Categorical, T: float, noise: float, rng: np.random.Generator
) -> Categorical:
    if not T > 0:
        raise InvalidTemperature(f'temperature must be > 0, got {T}')
    eps = noise * rng.standard_normal(cloud.num_labels)
    return Categorical(_temper(cloud.probs, T, eps))


def _sample_labels(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(probs, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(probs.shape[0])
    return np.argmax(cum > u[:, None], axis=1)


def _features(probs: np.ndarray, dim: int, rng: np.random.Generator) -> np.ndarray:
    base = np.log(np.maximum(probs, _LOG_FLOOR))
    base = base + rng.standard_normal(base.shape)
    n, k = base.shape
    if dim <= k:
        return base[:, :dim]
    return np.hstack([base, np.zeros((n, dim - k))])


def gen_pool(config: SynthConfig) -> List[Example]:
    '''
    i.i.d. examples, bit-identical for a given seed.
    '''
    config.check()
    rng = np.random.default_rng(config.seed)
    n, k = config.pool_size, config.num_labels

    clouds = rng.dirichlet(np.full(k, config.dirichlet_concentration), size=n)
    # renormalize against gamma-underflow rows before anything else sees them
    clouds = clouds / clouds.sum(axis=1, keepdims=True)
    eps = config.edge_noise * rng.standard_normal((n, k))
    edges = _temper(clouds, config.edge_temperature, eps)
    labels = _sample_labels(clouds, rng)
    features = _features(clouds, config.dim, rng)

    pool = []
    for i in range(n):
        feat = features[i].copy()
        feat.flags.writeable = False
        example = Example(
            id=f'x{i:06d}',
            features=feat,
            cloud_dist=Categorical(clouds[i]),
            edge_dist=Categorical(edges[i]),
            label=int(labels[i]),
        )
        validate_example(example)
        pool.append(example)

    if debug.enabled:
        debug('generated ', n, ' examples, K=', k, ' d=', config.dim)
    return pool
