"""Exception types shared across the package."""


class GofdmError(Exception):
    """Base class for all package errors."""


class ConfigError(GofdmError, ValueError):
    """Inconsistent or invalid configuration."""


class RankError(GofdmError, ValueError):
    """A preprocessing factor fails the full-rank condition needed for sequence recovery."""

    def __init__(self, factor: str, message: str):
        super().__init__(message)
        self.factor = factor


class DegenerateInputError(GofdmError, ValueError):
    """Input that makes a metric undefined, e.g. an all-zero OFDM symbol."""
