"""Exception hierarchy shared by every bracketflow module."""


class BracketFlowError(Exception):
    """Base class for all errors raised by the package."""


class DimensionError(BracketFlowError, ValueError):
    pass


class SymmetryError(BracketFlowError, ValueError):
    pass


class RankError(BracketFlowError, ArithmeticError):
    pass


class NumericalError(BracketFlowError, ArithmeticError):
    pass


class ConvergenceError(BracketFlowError, ArithmeticError):
    pass


class NotDiagonalizableError(BracketFlowError, ValueError):
    """Raised when a matrix-eigenvalue table is requested for a non-linear generator."""


class StiffnessError(NumericalError):
    """Adaptive step size fell below the underflow threshold."""


class DriftError(NumericalError):
    """A conserved-quantity monitor exceeded its bound.

    The offending monitor name is kept in ``monitor``.
    """

    def __init__(self, monitor: str, value: float, bound: float, t: float):
        self.monitor = monitor
        self.value = value
        self.bound = bound
        self.t = t
        super().__init__(f"{monitor} = {value:.3e} exceeds bound {bound:.3e} at t = {t:.6g}")


class StateError(BracketFlowError, ValueError):
    pass


class InsufficientDataError(BracketFlowError, ValueError):
    pass


class ConfigError(BracketFlowError, ValueError):
    pass
