"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument lies outside a function's mathematical domain."""


class PoleError(DomainError):
    """Evaluation requested exactly at a pole."""


class GridGeometryError(ValueError):
    """Grid metadata (domain tag, spacing, shape) does not match the operation."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance.

    The best available estimate is attached as ``best`` and the error
    estimate as ``err_estimate``.
    """

    def __init__(self, message, best=None, err_estimate=None):
        super().__init__(message)
        self.best = best
        self.err_estimate = err_estimate


class StepSizeError(RuntimeError):
    """ODE step size underflowed before the local tolerance was met."""


class ConfigError(ValueError):
    """Scenario configuration is malformed; carries a field/line hint."""
