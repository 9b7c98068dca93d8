"""Exception types shared across the package.

The CLI maps these to exit codes: ConfigError -> 1, OSError -> 2,
InvariantError (and anything unexpected) -> 3.
"""


class TopicStreamError(Exception):
    """Base class for package errors."""


class ConfigError(TopicStreamError):
    """Invalid configuration or input that fails validation."""


class InvariantError(TopicStreamError):
    """An internal consistency check failed."""
