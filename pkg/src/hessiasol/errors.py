"""Exception hierarchy shared by all modules."""


class HessiasolError(Exception):
    """Base class for library errors."""


class DomainError(HessiasolError, ValueError):
    """Argument outside the set where the operation is defined."""


class GridError(HessiasolError, ValueError):
    """Grid/field mismatch or a stencil leaving the grid."""


class NumericalError(HessiasolError, ArithmeticError):
    """An iterative numerical procedure failed."""


class ConvergenceError(NumericalError):
    """Iteration cap reached before the stopping criterion held."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = [] if history is None else list(history)


class StabilityError(NumericalError):
    """Explicit iteration is blowing up; the time step is too large."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = [] if history is None else list(history)


class ConstructionError(HessiasolError, RuntimeError):
    """A barrier or witness construction could not be certified."""

    def __init__(self, message, worst=None):
        super().__init__(message)
        self.worst = worst
