"""Exception hierarchy shared by all modules."""


class VortexStabError(Exception):
    """Base class for all library errors."""


class DomainError(VortexStabError, ValueError):
    """An argument lies outside the domain of the requested function."""


class AccuracyError(VortexStabError, ArithmeticError):
    """A numerical procedure did not reach its target accuracy.

    The best estimate and the achieved error are attached so callers can
    decide whether the value is still usable.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ScaledRepresentationError(VortexStabError, OverflowError):
    """Unscaled value would overflow; use the exponentially scaled variant."""


class AssumptionViolation(VortexStabError, ValueError):
    """Input data violate a structural assumption on the vortex profile."""


class ProjectionRankError(VortexStabError, ArithmeticError):
    """The discrete divergence constraint is rank deficient."""

    def __init__(self, message, singular_values=None):
        super().__init__(message)
        self.singular_values = singular_values


class AssemblyError(VortexStabError, RuntimeError):
    """Inconsistent dimensions between cached bases and operators."""


class CriticalLayerError(VortexStabError, ZeroDivisionError):
    """gamma(r) = s + i m Omega(r) (nearly) vanishes at a grid node."""

    def __init__(self, message, node=None, radius=None):
        super().__init__(message)
        self.node = node
        self.radius = radius


class ConditioningError(VortexStabError, ArithmeticError):
    """A linear system is numerically singular (s too close to the spectrum)."""

    def __init__(self, message, distance=None):
        super().__init__(message)
        self.distance = distance


class SolverError(VortexStabError, RuntimeError):
    """An eigen- or time-stepping solver failed."""
