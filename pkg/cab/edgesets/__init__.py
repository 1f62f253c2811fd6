from cab.domain import ConfigError, DataError


class InvalidEdgeSetEnvironment(DataError):
    pass


class UnknownEdgeSetMethod(ConfigError):
    pass


class EdgeSetMethod:
    '''
    Builds edge prediction sets for one trial at one miscoverage level.
    `calibrate` runs once on the trial's calibration split before any
    `build` call; it may only read calibration examples.
    '''

    name = None

    # The below methods should be implemented by subclasses

    def calibrate(self, trial, alpha):
        raise NotImplementedError

    def build(self, trial, example):
        raise NotImplementedError

    def __repr__(self):
        return self.__class__.__name__


def make_edge_set_method(spec) -> EdgeSetMethod:
    if spec.kind == 'hms':
        from cab.edgesets.hms import HighestMass

        return HighestMass()
    if spec.kind == 'cp':
        from cab.edgesets.cp import Conformal

        return Conformal()
    if spec.kind == 'lcp':
        from cab.edgesets.lcp import LocalizedConformal

        return LocalizedConformal(bandwidth=spec.bandwidth, kernel=spec.kernel)
    raise UnknownEdgeSetMethod(f'unknown edge set method {spec.kind!r}')
