"""Exception hierarchy with the CLI exit-code contract attached."""

from typing import Optional

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INVALID_CONFIG = 2
EXIT_NUMERICAL = 3


class ShadowLabError(Exception):
    """Base class for every error raised by shadowlab."""

    exit_code = EXIT_NUMERICAL


class ScenarioError(ShadowLabError):
    """Scenario file is unreadable, schema-invalid or inconsistent."""

    exit_code = EXIT_INVALID_CONFIG


class ValidationError(ScenarioError):
    """Mathematical input fails its contract (non-symplectic matrix, degenerate subspace, ...)."""


class ReportError(ShadowLabError):
    """Output location cannot be written."""

    exit_code = EXIT_INVALID_CONFIG


class NumericalError(ShadowLabError):
    """A numerical procedure failed to deliver a certified result."""

    exit_code = EXIT_NUMERICAL


class ChartDivergenceError(NumericalError):
    """Newton correction of the shadow boundary did not converge."""

    def __init__(self, message: str, node_index: Optional[int] = None, t_value: Optional[float] = None):
        super().__init__(message)
        self.node_index = node_index
        self.t_value = t_value


class BeyondLocalRegimeError(NumericalError):
    """The shadow boundary chart lost rank."""


class UnderResolvedError(NumericalError):
    """Quadrature orders disagree beyond the resolution tolerance."""


class OracleConvexityError(NumericalError):
    """Radial membership is not monotone along a ray."""


class IntegrationError(NumericalError):
    """ODE integration failed (step-size underflow or tolerance breach)."""


class OrbitSearchError(NumericalError):
    """No closed characteristic was found from any seed."""


class NormalFormError(NumericalError):
    """Normal-form reduction was called out of order or failed its checks."""
