"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A linear-algebra operation failed or is too ill-conditioned to trust.

    Carries ``condition`` (estimated condition number of the offending
    matrix) when available.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class DivergenceError(RuntimeError):
    """An iteration failed to converge or a simulated quantity blew up.

    ``residual`` holds the last iteration residual (fixed-point solvers),
    ``step`` the offending time step (simulations), and ``history`` any
    partial training record, when the raising context has them.
    """

    def __init__(self, message, residual=None, step=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.step = step
        self.history = history
