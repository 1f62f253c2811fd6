from cab.edgesets import EdgeSetMethod
from cab.predsets import hms


class HighestMass(EdgeSetMethod):
    name = 'hms'

    def __init__(self):
        self.alpha = None

    def calibrate(self, trial, alpha):
        self.alpha = alpha

    def build(self, trial, example):
        return hms(example.edge_dist, self.alpha)
