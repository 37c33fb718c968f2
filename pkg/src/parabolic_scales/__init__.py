"""Distinguished curves and Einstein scales on conformal, Legendrean contact and CR geometries."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateDirection,
    DegenerateSampling,
    DimensionError,
    NormalizationError,
    NumericalBreakdown,
    ParabolicScalesError,
    SingularMetric,
    SpecMismatch,
)

__all__ = [
    "__version__",
    "ConfigError",
    "DegenerateDirection",
    "DegenerateSampling",
    "DimensionError",
    "NormalizationError",
    "NumericalBreakdown",
    "ParabolicScalesError",
    "SingularMetric",
    "SpecMismatch",
]
