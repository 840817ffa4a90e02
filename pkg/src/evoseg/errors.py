"""Exception types shared across the package.

Every error raised by evoseg derives from EvosegError so callers can catch
the whole family with one clause. The CLI maps these onto exit codes.
"""


class EvosegError(Exception):
    """Base class for all evoseg errors."""


class DecodeError(EvosegError):
    """An input image could not be decoded (bad format, depth, truncation)."""


class ConfigError(EvosegError):
    """A parameter or configuration value is out of its legal range."""


class ConsistencyError(EvosegError):
    """Two inputs that must agree (lengths, cluster counts) do not."""


class CapacityError(EvosegError):
    """The instance exceeds a hard size bound (exhaustive search guard)."""


class EmptyInputError(EvosegError):
    """An operation received an empty image or histogram."""


class SynthesisError(EvosegError):
    """A synthetic-image request produced out-of-gamut colours."""
