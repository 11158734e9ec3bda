"""Exception hierarchy for the solver.

Exit-code mapping used by the command line front end:
config/validation errors -> 2, numerical failures -> 3,
theory-regime breaches (ball exit, wave-strength overflow) -> 4.
"""


class GlimmError(Exception):
    """Base class for every error raised by this package."""


# ---------------------------------------------------------------------------
# configuration / validation (exit code 2)


class ConfigError(GlimmError):
    """Malformed or inconsistent run configuration."""


class ParseError(ConfigError):
    """Configuration file could not be parsed."""


class ValidationError(ConfigError):
    """Configuration parsed but violates a documented constraint."""


class UnknownSystem(ConfigError):
    """Requested builtin system name does not exist."""


class InvalidParams(ConfigError):
    """System parameters outside their admissible range."""


# ---------------------------------------------------------------------------
# numerical failures (exit code 3)


class NumericalError(GlimmError):
    """A solver iteration failed to meet its tolerance."""


class NonHyperbolic(NumericalError):
    """Flux Jacobian has complex or coincident eigenvalues."""


class SingularJacobian(NumericalError):
    """Flux Jacobian not invertible where the scheme needs its inverse."""


class NewtonDivergence(NumericalError):
    """Damped Newton iteration failed to converge."""


class CurveIntegrationFailure(NumericalError):
    """Rarefaction-curve integrator could not reach its error target."""


class HugoniotSolveFailure(NumericalError):
    """Shock-branch continuation failed to converge."""


class AdmissibilityError(NumericalError):
    """Emitted wave violates the Lax inequalities or speed ordering."""


class CFLViolation(NumericalError):
    """Observed wave speed reached the mesh speed."""


class BoundaryBreach(NumericalError):
    """Nontrivial wave entered the guard band at the domain edge."""


class NonConvex(NumericalError):
    """Scalar flux is not convex where the exact solver requires it."""


class IntegrationFailure(NumericalError):
    """Reference ODE/characteristic integrator failed."""


# ---------------------------------------------------------------------------
# theory-regime breaches (exit code 4)


class RegimeBreach(GlimmError):
    """State left the regime in which the scheme's theory applies."""


class BallExit(RegimeBreach):
    """A produced state left the configured state-space ball."""


class SmallDataExceeded(RegimeBreach):
    """Total wave strength of a Riemann fan exceeded the small-data cap."""


EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_REGIME = 4


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, RegimeBreach):
        return EXIT_REGIME
    if isinstance(exc, GlimmError):
        return EXIT_NUMERICAL
    return EXIT_NUMERICAL
