"""Exception hierarchy shared by all distilkit modules."""


class DistilKitError(Exception):
    """Base class for all distilkit errors."""


class ParameterError(DistilKitError, ValueError):
    """Invalid argument: bad family parameters, dimension mismatch, empty keep set, ..."""


class CapacityError(DistilKitError):
    """Requested operator would exceed the configured dense-storage cap."""


class SamplingError(DistilKitError):
    """Rejection sampling exceeded its attempt cap."""


class OptimizationError(DistilKitError):
    """A see-saw or search could not produce a usable iterate (e.g. all restarts degenerate)."""


class FrameError(DistilKitError):
    """POVM element set does not span the operator space (no dual frame exists)."""


class NumericalError(DistilKitError):
    """Numerical consistency check failed (probability mass, degenerate post-selection, ...)."""
