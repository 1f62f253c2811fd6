from cab.domain import ConfigError


class UnknownRouter(ConfigError):
    pass


class Router:
    '''
    Decides which test inputs stay at the edge. `route` receives a routing
    view of the test batch (ids, predicted alignment, edge distributions)
    and returns the frozenset of ids processed at the edge. It never sees
    test labels or true alignments.
    '''

    name = None

    # Cloud-only inference reports satisfaction over every input, since each
    # one receives the cloud oracle set.
    scores_all_inputs = False

    # The below methods should be implemented by subclasses

    def route(self, view, risk):
        raise NotImplementedError

    def __repr__(self):
        return self.__class__.__name__


def make_router(name: str, gamma=None) -> Router:
    if name == 'cloud_only':
        from cab.routers.cloud_only import CloudOnly

        return CloudOnly()
    if name == 'edge_only':
        from cab.routers.edge_only import EdgeOnly

        return EdgeOnly()
    if name == 'cbd':
        from cab.routers.cbd import ConfidenceDeferral

        return ConfidenceDeferral(gamma=gamma)
    if name == 'cab':
        from cab.routers.cab import ConformalAlignment

        return ConformalAlignment()
    raise UnknownRouter(f'unknown cascade method {name!r}')
