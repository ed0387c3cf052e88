"""Exception types raised across the package."""


class MdacsError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(MdacsError, ValueError):
    pass


class InvalidInputError(MdacsError, ValueError):
    pass


class InvalidSelectionError(MdacsError, ValueError):
    pass


class UnsupportedScaleError(MdacsError, ValueError):
    pass


class ConfigError(MdacsError, ValueError):
    """Configuration problem tied to a named field (and line, when known)."""

    def __init__(self, field, message, line=None):
        self.field = field
        self.line = line
        where = f"{field}" if line is None else f"{field} (line {line})"
        super().__init__(f"{where}: {message}")
