"""Exception types raised across the package."""


class EstimationError(Exception):
    """Base class for errors raised by this package."""


class DegenerateDirectionError(EstimationError):
    """A truncation direction has (numerically) zero variance.

    Usually indicates an ill-conditioned or misspecified model upstream;
    the caller should not silently clamp and continue.
    """


class NumericalFailureError(EstimationError):
    """A linear-algebra step failed (e.g. a matrix that must be positive
    definite is not, even after jitter escalation)."""

    def __init__(self, message, smallest_eigenvalue=None, step=None):
        if step is not None:
            message = f"{message} (time step {step})"
        if smallest_eigenvalue is not None:
            message = f"{message}; smallest eigenvalue {smallest_eigenvalue:.3e}"
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue
        self.step = step


class OracleInfeasibleError(EstimationError):
    """The sampling oracle could not produce any usable samples."""


class QuadratureError(EstimationError):
    """Numerical integration failed to reach the requested accuracy."""

    def __init__(self, message, residual=None):
        if residual is not None:
            message = f"{message}; largest residual {residual:.3e}"
        super().__init__(message)
        self.residual = residual


class DegeneracyError(EstimationError):
    """All particle weights underflowed to zero."""

    def __init__(self, message, step=None):
        if step is not None:
            message = f"{message} (time step {step})"
        super().__init__(message)
        self.step = step


class GeometryError(EstimationError):
    """Satellite geometry could not be constructed or is degenerate."""


class ConfigError(EstimationError):
    """A benchmark configuration file or value is invalid."""
