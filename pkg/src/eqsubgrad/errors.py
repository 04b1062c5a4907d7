"""Exception types shared across the package."""


class EqSubgradError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(EqSubgradError):
    """Vector dimension differs from what an operator or problem expects."""


class InvalidConfig(EqSubgradError):
    """A configuration value violates its documented constraints."""


class InvalidRange(EqSubgradError):
    """Step-size range [a, b] is not strictly inside (0, 2/M^2)."""


class OracleFailure(EqSubgradError):
    """No maximization strategy can certify the requested accuracy."""


class SizeOverflow(EqSubgradError):
    """A certified bound exceeded the configured size budget."""


class HorizonExceeded(EqSubgradError):
    """A query needs more recorded data than the trajectory holds."""


class Undecided(EqSubgradError):
    """A truncated scan cannot settle the queried value."""
