"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: InputError -> 2, EmptyResultError -> 3,
plain OSError -> 1.
"""


class ArtrecError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ArtrecError, ValueError):
    """Invalid input data or configuration (malformed files, bad values)."""


class ParseError(InputError):
    """A file failed to parse; carries the path and 1-based line number."""

    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class EmptyResultError(ArtrecError, RuntimeError):
    """A request produced no usable result (no cases, empty profile)."""
