class SwesatError(Exception):
    pass


class ConfigurationError(SwesatError, ValueError):
    """Invalid physical, grid or run configuration."""


class RegimeError(ConfigurationError):
    """Operation not defined for the flow regime at hand."""


class AdmissibilityError(ConfigurationError):
    """Boundary coefficients or penalties violate the energy-stability bounds."""


class GridError(ConfigurationError):
    pass


class ShapeError(SwesatError, ValueError):
    pass


class DivergenceError(SwesatError, RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, message: str, step: int | None = None, time: float | None = None):
        super().__init__(message)
        self.step = step
        self.time = time
