"""Exception and warning types shared across the package."""


class LabError(Exception):
    """Base class for every error raised by tpslab."""


class ValidationError(LabError, ValueError):
    """Input violates a precondition. The CLI maps these to exit code 2."""


class NotHermitian(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class DimensionOverflow(ValidationError):
    pass


class InvalidFactorDim(ValidationError):
    pass


class EmptyKeepSet(ValidationError):
    pass


class ZeroVector(ValidationError):
    pass


class AngleLengthMismatch(ValidationError):
    pass


class NotProductState(ValidationError):
    pass


class NoConvergence(LabError, ArithmeticError):
    """The dense eigensolver gave up."""


class AmbiguousClustering(LabError):
    """Raised only when a caller escalates an ambiguous clustering (``--strict``)."""


class AmbiguousClusteringWarning(UserWarning):
    """An eigenvalue gap sits just above the clustering tolerance."""
