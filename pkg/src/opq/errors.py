"""Exception types shared across the package.

Domain errors (things a caller can reasonably hit with valid-looking input)
all derive from DomainError so the CLI can map them to exit code 2.
"""


class OpqError(Exception):
    """Base class for all package errors."""


class DomainError(OpqError):
    """A request that is structurally valid but outside the physical domain."""


class StepUnderflow(OpqError):
    """The adaptive integrator could not meet tolerance.

    Carries the time reached so the caller can see how far the path got
    (typically a singular approach, e.g. a runaway momentum).
    """

    def __init__(self, t_reached, message=""):
        self.t_reached = t_reached
        super().__init__(message or f"step size underflow at t = {t_reached:.6g}")


class SingularCoefficient(DomainError):
    """a(theta) = 0 where a strictly positive diffusion rate is required."""


class NoRealBranch(DomainError):
    """No real momentum branch exists at this (theta, E): forbidden region."""


class NoIsland(DomainError):
    """Equal measurement strengths: the phase portrait has no periodic island."""


class OutOfIslandRange(DomainError):
    """Energy outside [E_m, E_c] for an island-only computation."""


class QuadratureFailure(OpqError):
    """A quadrature did not converge to the requested accuracy."""


class ForbiddenRegion(DomainError):
    """The traversal integrand turned imaginary along the requested leg."""


class NotInIsland(DomainError):
    """Initial angle outside the island theta-range."""


class NoSolution(DomainError):
    """Root search found no solution in the given range."""


class AmbiguousBracket(OpqError):
    """Manifold refinement too coarse to isolate roots; increase the budget."""


class RefinementBudgetExceeded(OpqError):
    """Manifold stretched beyond the point budget before meeting the gap target."""


class SingularLegendre(DomainError):
    """a(theta) = 0 on the path: the Legendre transform is singular."""


class UnstableStep(OpqError):
    """Purity drifted too far in one SDE step; decrease dt."""


class EmptySelection(DomainError):
    """Post-selection matched no trajectories."""

    def __init__(self, fraction=0.0, message=""):
        self.fraction = fraction
        super().__init__(message or "post-selection matched no trajectories")


class PoleDivergence(DomainError):
    """Analytic-limit expression evaluated too close to a pole."""
