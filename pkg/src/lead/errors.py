"""Exception hierarchy shared across the package."""


class LeadError(Exception):
    """Base class for all errors raised by ``lead``."""


class InvalidInputError(LeadError, ValueError):
    """An argument violates a documented precondition."""


class InvalidConfigError(LeadError, ValueError):
    """A configuration value is out of its allowed range."""


class InvariantViolation(LeadError, RuntimeError):
    """An internal invariant failed; indicates a bug or corrupted state."""


class TruncatedDistributionError(LeadError):
    """Exact statistics were requested from a truncated (top-k) distribution."""
