"""Exception hierarchy for the solver.

Every failure the iteration can hit derives from :class:`SolverError` so the
driver can catch one type, record where it happened, and still hand back a
report.
"""


class SolverError(Exception):
    """Base class for all solver failures."""

    status = "guard_error"


class NonPhysicalState(SolverError):
    """Closure evaluated outside the admissible region (negative radicand)."""


class AxialVelocityDegenerate(SolverError):
    """Axial velocity q1 + r2 fell below the guard threshold."""


class ForwardFlowLost(SolverError):
    """Axial mass flux dropped below the forward-flow guard."""


class GuardViolated(SolverError):
    """Mass-flux field left the band around the background state."""


class BoundaryEscaped(SolverError):
    """Free boundary grew to sup|f| >= 1/4."""


class DegenerateBoundary(SolverError):
    """Free boundary touches or crosses the upper wall."""


class CompatibilityViolated(SolverError):
    """Endpoint slope conditions f'(0) = f'(L) = 0 do not hold."""


class SolverDiverged(SolverError):
    """A linear solve failed to reach its residual tolerance."""


class CapReached(SolverError):
    """An iteration loop hit its cap before meeting its tolerance."""

    status = "cap_reached"


class InvalidProfile(ValueError):
    """Inlet data violates the support or positivity requirements."""


class ParseError(ValueError):
    """Syntax error in a configuration file."""


class ValidationError(ValueError):
    """Configuration parsed but violates one or more constraints.

    ``violations`` holds every problem found, not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("\n".join(self.violations))
