"""Energy-stable SBP-SAT finite volume solver for the linearized 1D shallow water equations."""

__version__ = "0.1.0"

from .errors import ConfigurationError, DivergenceError, SwesatError
from .model import FlowConfig, classify_regime, reflection_coefficients, spectral_data
from .sbp import build_grid, build_operators
from .scenarios import make_scenario
from .solver import RunParams, SemiDiscretization, run

__all__ = [
    "ConfigurationError",
    "DivergenceError",
    "FlowConfig",
    "RunParams",
    "SemiDiscretization",
    "SwesatError",
    "build_grid",
    "build_operators",
    "classify_regime",
    "make_scenario",
    "reflection_coefficients",
    "run",
    "spectral_data",
]
