class QtbError(ValueError):
    """Base class for input and invariant errors raised by this package."""


class DimensionError(QtbError):
    pass


class NotHermitianError(QtbError):
    pass


class NotPositiveError(QtbError):
    pass


class TraceError(QtbError):
    pass


class NotUnitaryError(QtbError):
    pass


class NotTracePreservingError(QtbError):
    pass


class InconsistentDilationError(QtbError):
    pass


class ProbabilityFloorError(QtbError):
    """An outcome's probability is too small to condition on."""


class TrivialPostSelectionError(QtbError):
    pass


class ResolutionError(QtbError):
    pass
