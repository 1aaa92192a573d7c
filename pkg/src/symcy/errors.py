"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the region where an operation is defined."""


class WallSingularityError(ArithmeticError):
    """A wall factor X_lambda(rho)/tanh(lambda) has no finite limit at the point."""

    def __init__(self, message, root_index=None):
        super().__init__(message)
        self.root_index = root_index


class QuadratureError(ArithmeticError):
    """Adaptive quadrature ran out of subdivisions before reaching tolerance."""


class ContinuationError(RuntimeError):
    """Base class for failures of the continuation solver.

    ``state`` carries the last accepted continuation state, when there is one.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class NewtonDivergence(ContinuationError):
    pass


class CertificateViolation(ContinuationError):
    def __init__(self, message, state=None, cells=None):
        super().__init__(message, state)
        self.cells = cells if cells is not None else []


class ScheduleExhausted(ContinuationError):
    pass
