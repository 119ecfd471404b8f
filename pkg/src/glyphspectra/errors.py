"""Exception hierarchy shared across the pipeline."""


class GlyphError(Exception):
    """Base class for all library errors."""


class ParameterError(GlyphError):
    """A parameter violates an operation's precondition."""


class ContentError(GlyphError):
    """An input image or skeleton has no usable content."""


class ContractError(GlyphError):
    """An argument violates a structural contract (shape, symmetry, range)."""


class ConsistencyError(GlyphError):
    """Inputs that must agree with each other do not."""


class DegeneracyError(GlyphError):
    """Coincident coordinates make a distance-based quantity undefined."""


class TrainingError(GlyphError):
    """Training data cannot produce a model (missing class, empty set)."""


class DataError(GlyphError):
    """A dataset or manifest cannot support the requested operation."""


class ConfigError(GlyphError):
    """An invalid run configuration."""
