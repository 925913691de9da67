"""Exception hierarchy shared by all modules."""


class PfaffianCQEDError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(PfaffianCQEDError, ValueError):
    """Invalid or inconsistent input parameters."""


class ConvergenceError(PfaffianCQEDError, RuntimeError):
    """A truncated basis or iterative solver did not converge."""


class NoRootError(PfaffianCQEDError, RuntimeError):
    """No sign change of U2 inside the requested flux window."""


class GapClosedError(PfaffianCQEDError, RuntimeError):
    """The ground manifold is not separated from the rest of the spectrum."""

    def __init__(self, message, twist=None, gap=None):
        super().__init__(message)
        self.twist = twist
        self.gap = gap


class LanczosError(ConvergenceError):
    """Lanczos iteration stopped before the requested eigenpairs converged."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals
