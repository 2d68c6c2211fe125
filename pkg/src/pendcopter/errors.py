"""Exception types shared across the package."""


class PendcopterError(Exception):
    """Base class for all package errors."""


class InfeasibleCommand(PendcopterError):
    """Rotor mixing needs a negative squared speed or exceeds a rotor ceiling."""


class SingularConfiguration(PendcopterError):
    """Pendulum is too close to the vertical for the azimuth row to be defined."""


class SingularEquilibrium(SingularConfiguration):
    """Linearization requested at an equilibrium with cos(theta1) ~ 0."""


class DegenerateEquilibrium(PendcopterError):
    """Equivalent gimbal inertia undefined (cos(beta) + sin(beta) = 0)."""


class DegenerateConfiguration(DegenerateEquilibrium):
    """Measured gimbal attitude in the unsupported beta = -pi/4 (+k*pi) region."""


class NotStabilizable(PendcopterError):
    """Riccati iteration failed to converge within its budget."""


class NonFiniteState(PendcopterError):
    """Integration produced NaN or inf."""


class FrameMismatch(PendcopterError):
    """Two vectors with different frame tags were combined."""


class MetricUndefined(PendcopterError):
    """Requested metric does not apply to the segment."""


class ConfigError(PendcopterError):
    """Configuration file or CLI arguments are invalid."""


class SimulationError(PendcopterError):
    """Wraps a controller or plant error with the tick at which it happened."""

    def __init__(self, tick: int, t: float, cause: Exception):
        super().__init__(f"tick {tick} (t={t:.3f} s): {cause!r}")
        self.tick = tick
        self.t = t
        self.cause = cause
