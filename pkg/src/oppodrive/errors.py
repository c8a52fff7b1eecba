"""Exception types shared across the package."""


class OppodriveError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(OppodriveError):
    """Invalid environment / run configuration."""


class SpawnError(OppodriveError):
    """Could not place vehicles without overlap within the retry budget."""


class LifecycleError(OppodriveError):
    """Environment used after the episode already ended."""


class InputError(OppodriveError):
    """Malformed input to a pure operation (bad dims, empty text, ...)."""


class InterfaceError(OppodriveError):
    """Backend / goal contract violation (modality or dim mismatch)."""


class AvailabilityError(OppodriveError):
    """Remote embedding service unreachable after retries."""


class ProtocolError(OppodriveError):
    """Remote embedding service answered with a malformed response."""


class PersistenceError(OppodriveError):
    """Checkpoint file unreadable, truncated or shape-incompatible."""


class NumericalError(OppodriveError):
    """Non-finite value encountered during optimization."""
