"""Exception hierarchy shared by the whole package."""


class TswindError(Exception):
    """Base class for all package errors."""


class ValidationError(TswindError, ValueError):
    """Bad inputs: malformed files, out-of-range parameters, unknown keys."""


class NumericalError(TswindError, RuntimeError):
    """A numerical procedure failed (no root, no convergence, divergence)."""


class CareSolverError(NumericalError):
    """Riccati iteration did not converge.

    Carries the last residual so callers can report how close it got.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SimulationDiverged(NumericalError):
    """Closed-loop integration produced a non-finite state.

    The partial trace up to the last finite step is attached so it can
    still be flushed to disk for post-mortem inspection.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
