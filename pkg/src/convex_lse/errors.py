"""Exception types raised across the package."""


class ConvexLSEError(Exception):
    """Base class for all errors raised by convex_lse."""


class DimensionMismatch(ConvexLSEError, ValueError):
    pass


class ParameterOutOfRange(ConvexLSEError, ValueError):
    pass


class InvalidSet(ConvexLSEError, ValueError):
    """A set descriptor or constructor argument violates the set's invariants."""


class NonConvergence(ConvexLSEError, RuntimeError):
    pass


class ConvergenceWarning(UserWarning):
    """An iterative projection stopped at its iteration cap."""


class NegativeRadius(ConvexLSEError, ValueError):
    pass


class EmptyGrid(ConvexLSEError, ValueError):
    pass


class BracketFailure(ConvexLSEError, RuntimeError):
    pass


class PointsNotOnGrid(ConvexLSEError, ValueError):
    pass


class NonPositiveTmu(ConvexLSEError, ValueError):
    pass


class BadDesign(ConvexLSEError, ValueError):
    pass


class NonMonotoneTruth(ConvexLSEError, ValueError):
    pass


class NonPositiveValue(ConvexLSEError, ValueError):
    pass


class TooFewPoints(ConvexLSEError, ValueError):
    pass
