"""Non-Markovian infinitesimal propagation of photonic states in
Kolmogorov turbulence: closed-form propagation kernels, their numerical
oracles, and a scenario-driven CLI."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DomainError,
    GridGeometryError,
    PoleError,
    QuadratureError,
    StepSizeError,
)
from .grid import GridState, centered_grid
from .ipe import PhasePoint, TwoPhotonPoint
from .solutions import KernelValue
from .turbulence import NormalizedParams, TurbulenceParams

__all__ = [
    "__version__",
    "ConfigError",
    "DomainError",
    "GridGeometryError",
    "PoleError",
    "QuadratureError",
    "StepSizeError",
    "GridState",
    "centered_grid",
    "PhasePoint",
    "TwoPhotonPoint",
    "KernelValue",
    "NormalizedParams",
    "TurbulenceParams",
]
