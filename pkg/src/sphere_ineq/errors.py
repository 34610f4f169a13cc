"""Exception types shared by the numerical modules."""


class DomainError(ValueError):
    """An argument lies outside the domain where the operation is defined."""


class NonConvergentError(RuntimeError):
    """The requested tolerance could not be met within the iteration cap."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach its error target."""


class BracketError(ValueError):
    """A root bracket does not contain exactly one sign change."""


class PoleError(ValueError):
    """A tangent-frame quantity was requested too close to a pole."""


class NegativePotentialError(ValueError):
    """A potential that must be nonnegative took a negative value."""
