"""Exception hierarchy shared by all modules."""


class PolycritError(Exception):
    """Base class for errors raised by polycrit."""


class DomainError(PolycritError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(PolycritError, RuntimeError):
    """An iterative solver exhausted its budget.

    Attributes
    ----------
    operation : str
        Name of the failing operation, e.g. ``"solve_sl_eigen"``.
    residual : float
        Last residual reached.
    history : list of float
        Residual (or other progress measure) per iteration.
    """

    def __init__(self, operation, message, residual=float("nan"), history=None):
        self.operation = operation
        self.residual = residual
        self.history = list(history or [])
        super().__init__(f"{operation}: {message} (last residual {residual:.3e})")


class MeshIncompatibilityError(PolycritError, ValueError):
    """Two discrete profiles cannot be compared on a common node set."""


class SchemeViolationError(PolycritError, RuntimeError):
    """A discrete structural property (monotonicity, positivity) failed."""


class FitRejectedError(ConvergenceError):
    """A log-log regression failed its goodness-of-fit threshold."""


class InputError(PolycritError, OSError):
    """An input file is missing, unreadable or not valid JSON."""
