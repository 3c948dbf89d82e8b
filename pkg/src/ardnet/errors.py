"""Exception hierarchy shared across the package."""


class ArdnetError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(ArdnetError):
    """Inputs are structurally inconsistent (shapes, names, ranges)."""


class DomainError(ArdnetError):
    """Arguments lie outside an operation's mathematical domain."""


class CapacityError(ArdnetError):
    """Problem size exceeds a hard enumeration cap."""


class ParseError(ArdnetError):
    """A file could not be parsed; carries a line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateEvidenceError(ArdnetError):
    """Every grid point received zero posterior weight."""
