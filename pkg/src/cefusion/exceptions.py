"""Exception hierarchy.

All errors subclass ``ValueError`` so callers that only care about bad
input can catch one type.
"""


class CEFusionError(ValueError):
    """Base class for all package errors."""


class ParameterError(CEFusionError):
    """An argument is outside its documented domain."""


class ShapeError(CEFusionError):
    """Array dimensions disagree."""


class ConfigurationError(CEFusionError):
    """Incompatible combination of settings (e.g. Rule 1 on hierarchical output)."""


class DataError(CEFusionError):
    """Malformed, misaligned or empty input data."""
