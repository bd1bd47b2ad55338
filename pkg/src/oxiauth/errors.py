"""Exception types shared across the pipeline stages."""


class OxiAuthError(Exception):
    """Base class for all pipeline errors."""


class ParseError(OxiAuthError):
    """A raw input file could not be parsed (bad header, malformed row)."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc = f" [{loc}]"
        super().__init__(message + loc)


class ValidationError(OxiAuthError):
    """Input data violates a structural invariant (e.g. timestamps)."""


class InsufficientDataError(OxiAuthError):
    """Too little valid data remains to run the requested stage."""
