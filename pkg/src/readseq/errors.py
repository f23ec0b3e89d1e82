"""Exception types shared across the pipeline."""


class ReadseqError(Exception):
    """Base class for all errors raised by readseq."""


class ValidationError(ReadseqError, ValueError):
    """An input value violates a documented invariant."""


class ParseError(ValidationError):
    """A malformed record in an input file.

    ``line`` is 1-based and counts the header line; ``column`` is the
    offending field name (or ``None`` when the whole row is bad).
    """

    def __init__(self, message: str, line: int | None = None, column: str | None = None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ContractError(ReadseqError, ValueError):
    """A function was called outside its precondition (e.g. an empty line)."""


class DegenerateSplitError(ReadseqError):
    """Scores cannot be split into Low/High groups."""
