"""Exception types shared across the package."""


class PolicheckError(Exception):
    """Base class for all policheck errors."""


class ParseError(PolicheckError):
    """Syntax error in a policy, main-KB, oracle, or signature file.

    Positions are 1-based and point into the source text.
    """

    def __init__(self, message: str, line: int, column: int, token: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.token = token
        where = f"{line}:{column}: {message}"
        if token:
            where += f" (at {token!r})"
        super().__init__(where)


class SignatureViolation(PolicheckError):
    """Role or concrete-property names shared between the main side and the oracle."""

    def __init__(self, names):
        self.names = tuple(sorted(names))
        super().__init__("shared non-concept names: " + " ".join(self.names))


class OracleFailure(PolicheckError):
    """The oracle backend failed to answer (transport error, protocol error, timeout)."""


class ResourceLimitError(PolicheckError):
    """A configured resource cap (split blowup, saturation fact count) was exceeded."""


class GenerationError(PolicheckError):
    """The benchmark generator could not satisfy its constraints."""
