"""Shared exception types."""


class ResourceCapError(RuntimeError):
    """An enumeration would exceed the configured size caps.

    Raised instead of silently degrading: callers decide whether to shrink
    the instance, switch to a sampling mode, or abort.
    """


class ConfigError(ValueError):
    """A malformed experiment configuration; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")
