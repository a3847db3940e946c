"""Exception hierarchy shared across the package.

Every error raised by evload derives from :class:`EvloadError`.  The
value-like errors additionally derive from :class:`ValueError` so callers
can catch them with plain stdlib semantics.
"""


class EvloadError(Exception):
    """Base class for all evload errors."""


class StructuralError(EvloadError, ValueError):
    """Mismatched shapes, labels, grids or column layouts."""


class DomainError(EvloadError, ValueError):
    """An argument is outside its valid domain (e.g. non-positive power)."""


class EmptyDistributionError(EvloadError, ValueError):
    """No observations available to build a distribution."""


class EmptyFleetError(EvloadError, ValueError):
    """An operation that needs at least one EV received none."""


class SimilarityUndefinedError(EvloadError, ValueError):
    """Cosine similarity requested against a zero vector."""


class NormalizationError(EvloadError, ValueError):
    """Max-normalization of an all-zero profile."""


class ParseError(EvloadError):
    """Input file is unreadable or its header/layout is wrong."""


class ModelSchemaError(EvloadError):
    """Model file has a wrong schema version or fails validation."""


class ConfigError(EvloadError):
    """Invalid run configuration (flags, penetration, mix ratios...)."""
