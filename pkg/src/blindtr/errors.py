"""Exception types raised by numerical routines."""


class NumericalError(ArithmeticError):
    """Base class for numerical failures (non-convergence, ill-conditioning)."""


class ConvergenceError(NumericalError):
    """A truncated integral or series did not reach its tolerance."""


class IllConditionedError(NumericalError):
    """A linear solve or decomposition lost too much precision."""
