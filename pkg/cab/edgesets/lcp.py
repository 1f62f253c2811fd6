from typing import Optional

import numpy as np

from cab.edgesets import EdgeSetMethod, InvalidEdgeSetEnvironment
from cab.edgesets.cp import calibration_scores
from cab.predsets import (
    KernelKind,
    KernelSpec,
    LocalizedQuantile,
    suggest_bandwidth,
    threshold_set,
)
from cab.utils import Debug

debug = Debug(__name__)


class LocalizedConformal(EdgeSetMethod):
    '''
    `bandwidth=None` picks h from the calibration and training features via
    `suggest_bandwidth`.
    '''

    name = 'lcp'

    def __init__(self, bandwidth: Optional[float] = None, kernel: str = KernelKind.GAUSSIAN):
        self.bandwidth = bandwidth
        self.kernel = kernel
        self.alpha = None
        self.quantile = None
        self.rng = None

    def _features(self, examples):
        if not examples:
            return np.zeros((0, 0))
        dims = {example.features.size for example in examples}
        if len(dims) != 1:
            raise InvalidEdgeSetEnvironment(f'mixed feature dimensions {sorted(dims)}')
        return np.vstack([example.features for example in examples])

    def calibrate(self, trial, alpha):
        self.alpha = alpha
        scores = calibration_scores(trial.cal)
        features = self._features(trial.cal)

        h = self.bandwidth
        if self.kernel == KernelKind.GAUSSIAN and h is None:
            h = suggest_bandwidth(features, self._features(trial.tr))
        spec = KernelSpec(self.kernel, h if h is not None else 1.0)

        self.quantile = LocalizedQuantile(features, scores, spec)
        self.rng = trial.stream('lcp', self.name, h, alpha)
        if debug.enabled:
            debug('alpha=', alpha, ' kernel=', spec)

    def build(self, trial, example):
        q = self.quantile.threshold(example.features, self.alpha, self.rng)
        return threshold_set(example.edge_dist, q)
