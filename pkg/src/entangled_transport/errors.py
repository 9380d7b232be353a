"""Exception types shared across the package."""


class TransportError(Exception):
    """Base class for numerical failures raised by the engines."""


class ConfigInvalid(ValueError):
    """Experiment configuration failed validation."""


class GridTooCoarse(TransportError):
    pass


class GridTooShort(TransportError):
    pass


class GridAliasing(TransportError):
    pass


class QuadratureNotConverged(TransportError):
    pass


class NoFringesResolved(TransportError):
    pass


class PathOutsideGrid(TransportError):
    pass


class BranchOutsideLattice(TransportError):
    pass


class PropagatorNotConverged(TransportError):
    pass


class NoEdgeBranchFound(TransportError):
    pass
