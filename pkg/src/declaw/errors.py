"""Exception hierarchy shared across the package."""


class DeclawError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DeclawError):
    """An object or configuration failed its construction-time checks."""


class DomainError(DeclawError):
    """An argument lies outside the range on which a quantity is certified."""


class ConfigurationError(DeclawError):
    """A run was set up inconsistently (windows, alignment, domain sizing)."""


class ShapeError(DeclawError):
    """Grids or arrays that must match do not."""


class AnalysisError(DeclawError):
    """A model-analysis request has no answer (e.g. no active value on a side)."""


class StabilityError(DeclawError):
    """The explicit update produced values outside the certified range."""


class GenerationError(DeclawError):
    """A seeded random construction failed after the allowed number of draws."""
