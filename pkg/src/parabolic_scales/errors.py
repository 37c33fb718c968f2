"""Exception types shared across the package."""


class ParabolicScalesError(Exception):
    """Base class for all library errors."""


class SpecMismatch(ParabolicScalesError, ValueError):
    """Algebra elements from different ambient algebras were combined."""


class DegenerateDirection(ParabolicScalesError, ValueError):
    """The generator of a model curve lies in the parabolic subalgebra."""


class DegenerateSampling(ParabolicScalesError, RuntimeError):
    """Sampled tangency system did not reach a rank plateau; resample."""


class SingularMetric(ParabolicScalesError, ValueError):
    """Metric is singular, not symmetric or not positive definite."""


class DimensionError(ParabolicScalesError, ValueError):
    """Operation undefined in this dimension."""


class NormalizationError(ParabolicScalesError, ValueError):
    """A direction does not satisfy its pairing normalization."""


class NumericalBreakdown(ParabolicScalesError, ArithmeticError):
    """Non-finite values or loss of conditioning during a computation."""


class ConfigError(ParabolicScalesError, ValueError):
    """Scenario configuration or fixture failed validation."""
