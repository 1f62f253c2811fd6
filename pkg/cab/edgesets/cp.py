from cab.edgesets import EdgeSetMethod, InvalidEdgeSetEnvironment
from cab.predsets import cp_threshold, nll_score, threshold_set
from cab.utils import Debug

debug = Debug(__name__)


def calibration_scores(examples):
    scores = []
    for example in examples:
        if example.label is None:
            raise InvalidEdgeSetEnvironment(
                f'{example.id}: calibration examples need labels'
            )
        scores.append(nll_score(example.edge_dist, example.label))
    return scores


class Conformal(EdgeSetMethod):
    name = 'cp'

    def __init__(self):
        self.threshold = None

    def calibrate(self, trial, alpha):
        self.threshold = cp_threshold(calibration_scores(trial.cal), alpha)
        if debug.enabled:
            debug('alpha=', alpha, ' threshold=', self.threshold)

    def build(self, trial, example):
        return threshold_set(example.edge_dist, self.threshold)
