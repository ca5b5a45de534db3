"""Exception hierarchy for the separation toolkit.

Every exception carries the process exit code the CLI maps it to:
1 for configuration problems, 2 for numerical failures, 3 for failed
verification.
"""
from typing import Optional


class SeparationError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 2


class ConfigError(SeparationError):
    """Invalid or malformed scenario document or settings file."""

    exit_code = 1


class GeometryError(ConfigError, ValueError):
    """Invalid manifold, obstacle or geometry-dependent parameter."""


class DomainError(GeometryError):
    """A geometric quantity is undefined for the requested inputs."""


class ShapeError(ValueError):
    """Field arrays do not match the grid they are evaluated on."""

    exit_code = 2


class PreconditionError(ValueError):
    """Field does not satisfy the wall condition or divergence bound."""

    exit_code = 2


class StencilError(ValueError):
    """Grid has too few points for the requested stencil."""

    exit_code = 2


class NumericalError(SeparationError):
    """A computation produced an unusable result."""

    exit_code = 2


class NonFiniteError(NumericalError):
    """NaN or Inf encountered during a time integration."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class CflError(NumericalError):
    """Time step violates the advective or diffusive stability limit."""


class StiffnessError(NumericalError):
    """Time step too large for the explicit ODE integrator."""


class PoissonError(NumericalError):
    """Pressure projection failed to reach the divergence tolerance."""


class ScheduleError(NumericalError):
    """Coefficient schedule is not defined on the integration span."""


class DegenerateLimitError(NumericalError):
    """Asymptotic fixed point requested where k(k + lambda0) <= 0."""


class VerificationError(SeparationError):
    """One or more verification checks failed their tolerance."""

    exit_code = 3
