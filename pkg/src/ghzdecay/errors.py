"""Exception types shared across the package."""


class GhzDecayError(Exception):
    """Base class for all package errors."""


class UnsupportedConfiguration(GhzDecayError):
    """The requested operation is not defined for this state or setup."""


class FitError(GhzDecayError):
    """A fit did not converge or its design was degenerate."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(GhzDecayError, ValueError):
    """Invalid experiment configuration; ``errors`` maps field name to message."""

    def __init__(self, errors):
        self.errors = dict(errors)
        detail = "; ".join(f"{k}: {v}" for k, v in self.errors.items())
        super().__init__(f"invalid configuration: {detail}")
