"""Exception hierarchy shared by the protocol modules."""


class EdenError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EdenError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SizeError(EdenError, ValueError):
    """A payload does not fit the configured encoding capacity."""


class FormatError(EdenError, ValueError):
    """Bytes or symbols are malformed or mutually inconsistent."""


class KeyMaterialError(EdenError, ValueError):
    """Key material is malformed."""


class ConfigError(EdenError, ValueError):
    """A configuration is invalid or cannot be realized."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key
