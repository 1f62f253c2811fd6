from typing import Optional

from cab.cascade import Destination, cbd_route
from cab.routers import Router
from cab.utils import Debug

debug = Debug(__name__)


class ConfidenceDeferral(Router):
    '''
    Keeps an input at the edge when its top-1 edge probability reaches
    gamma; gamma defaults to 1 - delta.
    '''

    name = 'cbd'

    def __init__(self, gamma: Optional[float] = None):
        self.gamma = gamma

    def route(self, view, risk):
        gamma = 1.0 - risk.delta if self.gamma is None else self.gamma
        selected = frozenset(
            i
            for i, dist in zip(view.ids, view.edge_dists)
            if cbd_route(dist, gamma).destination == Destination.EDGE
        )
        if debug.enabled:
            debug('gamma=', gamma, ' kept ', len(selected), '/', len(view.ids))
        return selected
