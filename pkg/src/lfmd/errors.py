"""Exception hierarchy shared by all lfmd modules."""


class MirrorDescentError(Exception):
    """Base class for every error raised by lfmd."""


class DomainError(MirrorDescentError, ValueError):
    pass


class DimensionMismatch(MirrorDescentError, ValueError):
    pass


class UnsupportedGeometry(MirrorDescentError, NotImplementedError):
    pass


class NumericalOverflow(MirrorDescentError, ArithmeticError):
    pass


class ZeroGradient(MirrorDescentError, ArithmeticError):
    """The dual norm of the subgradient is numerically zero.

    For a convex objective this certifies that the current point is a
    global minimizer, so callers stop instead of dividing by it.
    """


class NonMonotonicCall(MirrorDescentError, ValueError):
    pass


class GStatisticUnset(MirrorDescentError, LookupError):
    pass


class InvalidM(MirrorDescentError, ValueError):
    pass


class EmptyAverage(MirrorDescentError, LookupError):
    pass


class ConfigError(MirrorDescentError, ValueError):
    pass


class MissingOptimum(MirrorDescentError, LookupError):
    pass


class DegenerateFit(MirrorDescentError, ValueError):
    pass


class OracleUnavailable(MirrorDescentError, RuntimeError):
    pass


class NeedsExplicitR(ConfigError):
    """No closed-form Bregman radius exists for this geometry; pass R."""


class BoundUndefined(MirrorDescentError, ArithmeticError):
    pass
