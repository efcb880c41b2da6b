"""Exception types shared across the package."""


class GeorepError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GeorepError, ValueError):
    """Invalid configuration (grid parameters, CLI defaults, ...)."""


class DomainError(GeorepError, ValueError):
    """Input outside the valid domain (coordinates, cell ids, ...)."""


class ParseError(GeorepError, ValueError):
    """Malformed input text. Carries the 1-based line/row where parsing failed."""

    def __init__(self, message: str, line: int | None = None, row: int | None = None):
        if line is not None:
            message = f"{message}, line {line}"
        elif row is not None:
            message = f"{message}, row {row}"
        super().__init__(message)
        self.line = line if line is not None else row


class ContractError(GeorepError, ValueError):
    """Two values that must agree (e.g. histogram binnings) do not."""


class ConflictError(GeorepError):
    """An id is already taken."""


class NotFoundError(GeorepError, KeyError):
    """An id does not exist."""

    def __str__(self) -> str:  # KeyError quotes its message; keep it readable
        return self.args[0] if self.args else ""


class EmptyExtentError(GeorepError, ValueError):
    """An extent specification selected no cells."""


class AnalysisError(GeorepError, ValueError):
    """An analysis precondition failed (no usable sites, n too large, ...)."""
