"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid simulation configuration or parameter."""


class SchemaError(ValueError):
    """A trace file does not match the expected layout."""


class ChecksumError(ValueError):
    """A trace file's checksum record does not match its contents."""


class CausalityError(ValueError):
    """A precoding row depends on channel state it could not have known."""


class ReplayMismatch(ValueError):
    """Re-running a trace's configuration did not reproduce the trace."""
