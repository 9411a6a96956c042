"""Exception types shared across the package."""


class BerklabError(Exception):
    """Base class for package errors."""


class ConfigError(BerklabError):
    """Malformed or invalid configuration input."""


class NumericalError(BerklabError):
    """A solver failed to converge or a bracket could not be established."""


class InvariantViolation(BerklabError):
    """A model regularity condition was violated at runtime."""
