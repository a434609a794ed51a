"""Exception hierarchy shared by every module."""


class LevyFPError(Exception):
    """Base class for all package errors."""


class ParameterError(LevyFPError, ValueError):
    """Invalid stable-law or coefficient parameters."""


class NotAdmissibleError(ParameterError):
    """alpha == 1 with beta != 0: no fractional Fokker-Planck operator is defined."""

    def __init__(self, alpha, beta, where="solver"):
        self.alpha = alpha
        self.beta = beta
        super().__init__(
            f"{where}: alpha=1 with beta={beta!r} is not solver-admissible "
            "(requires alpha != 1 or beta == 0)"
        )


class DomainError(LevyFPError, ValueError):
    """Evaluation outside the range where a formula is trusted."""


class RefinementError(LevyFPError):
    """Grid too small or too coarse for the requested accuracy."""

    def __init__(self, message, required_half_width=None):
        self.required_half_width = required_half_width
        super().__init__(message)


class StabilityError(LevyFPError):
    """Explicit time step exceeds the stability bound."""

    def __init__(self, dt, admissible_dt, message=None):
        self.dt = dt
        self.admissible_dt = admissible_dt
        super().__init__(
            message or f"dt={dt:.6g} exceeds the RK4 stability bound; admissible dt <= {admissible_dt:.6g}"
        )


class PositivityError(LevyFPError):
    """Density undershoot beyond the abort threshold."""


class StepError(LevyFPError):
    """Non-finite coefficient evaluation during a Monte Carlo step."""

    def __init__(self, message, state=None):
        self.state = state
        super().__init__(message)


class SimulationError(LevyFPError):
    """Monte Carlo run violated its escape budget or another run-level contract."""


class EstimationError(LevyFPError):
    """Cumulant estimation or symbol fitting failed."""


class ConfigError(LevyFPError, ValueError):
    """Invalid experiment configuration."""
