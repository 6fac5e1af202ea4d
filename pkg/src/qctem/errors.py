"""Exception types shared across the package.

The CLI maps each class to its own exit code, so library code should raise
the most specific one that applies.
"""


class QctemError(Exception):
    """Base class for all package errors."""


class DomainError(QctemError, ValueError):
    """A physics or math precondition was violated (bad voltage, no CTF zero, ...)."""


class ConfigError(QctemError, ValueError):
    """A configuration file or command-line value could not be accepted."""
