"""Exception hierarchy shared by every module."""


class DsrLabError(Exception):
    """Base class for library errors."""


class InvalidStateError(DsrLabError, ValueError):
    pass


class PreconditionError(DsrLabError, ValueError):
    pass


class DimensionError(DsrLabError, ValueError):
    pass


class BracketError(DsrLabError, ValueError):
    pass


class InsufficientCutoffError(DsrLabError):
    """Raised when a truncated Fock space loses more probability than allowed.

    ``achieved_norm`` is the norm (or trace) actually retained.
    """

    def __init__(self, message, achieved_norm=None, cutoff=None):
        super().__init__(message)
        self.achieved_norm = achieved_norm
        self.cutoff = cutoff


class ConfigError(DsrLabError, ValueError):
    """Invalid sweep configuration. ``field`` names the offending key path."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
