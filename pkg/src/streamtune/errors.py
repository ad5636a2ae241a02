"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so user-facing failures
should be raised as one of the subclasses below rather than bare
RuntimeError/ValueError.
"""


class StreamtuneError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(StreamtuneError, ValueError):
    """Invalid user input: config files, parameter specs, CLI arguments."""


class ExecutionError(StreamtuneError, RuntimeError):
    """An experiment executor failed or could not be driven."""


class StateError(StreamtuneError, RuntimeError):
    """A persisted campaign state is corrupt or inconsistent."""
