"""Exception hierarchy shared by the pipeline stages and the CLI."""


class PndError(Exception):
    """Base class for all errors raised by pndetect."""


class DataError(PndError, ValueError):
    """Input data is malformed or violates a precondition."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ConfigError(PndError, ValueError):
    """A run parameter is outside the range an operation accepts."""


class ConvergenceError(PndError, ArithmeticError):
    """The eigensolver did not reach tolerance within its sweep budget."""

    def __init__(self, sweeps, off_norm):
        self.sweeps = sweeps
        self.off_norm = off_norm
        super().__init__(
            f"Jacobi eigensolver did not converge after {sweeps} sweeps "
            f"(off-diagonal norm {off_norm:.3e})"
        )
