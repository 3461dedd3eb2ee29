"""Exception types shared across the package.

The CLI maps these to exit codes: ConfigError -> 1, diagnostic failures
(reported, not raised) -> 2, InvariantViolation -> 3.
"""


class ZRPError(Exception):
    pass


class ConfigError(ZRPError, ValueError):
    """Invalid user input: kernel/rate/config/experiment specs."""


class RateRangeError(ZRPError, ValueError):
    """Rate function evaluated outside its representable range."""


class CertificationError(ZRPError, ValueError):
    """A truncation / tail bound could not be certified at the requested tolerance."""


class InvariantViolation(ZRPError, RuntimeError):
    """An internal exactness guarantee failed (replay mismatch, broken coupling order...)."""
