"""Exception types shared across the package."""


class GoldError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(GoldError):
    """Malformed input file (bad row, wrong field count, empty file)."""


class ValidationError(GoldError):
    """A value or structure violates a documented invariant."""


class ConfigError(GoldError):
    """An operation was called with an invalid configuration."""


class CompetitionExhausted(GoldError):
    """Fewer than two live clusters remain; winner/rival competition stops."""


class MetricUndefinedError(GoldError):
    """The requested validity index is undefined for this partition."""
