class TrsketchError(Exception):
    """Base class for errors raised by trsketch."""


class DimensionError(TrsketchError, ValueError):
    """Array shapes are inconsistent with each other."""


class InvalidInstanceError(TrsketchError, ValueError):
    """Problem data violates a structural requirement (zero rows, non-unit rows, ...)."""


class WrongSolverError(TrsketchError, ValueError):
    """The requested solver cannot handle the problem class."""


class DegenerateSetError(TrsketchError, ValueError):
    """A bound was requested for a set with zero fullness."""


class RegimeWarning(UserWarning):
    """A bound was evaluated outside the parameter range where it is certified."""


class DegenerateModelWarning(UserWarning):
    """A quadratic model had a zero matrix and was demoted to a linear one."""
