"""Exception hierarchy shared by all ginspectra modules."""


class GinspectraError(Exception):
    """Base class for errors raised by ginspectra."""


class ValidationError(GinspectraError, ValueError):
    """Raised when an argument, spec or config is invalid."""


class SpectrumFormatError(ValidationError):
    """Raised when a spectrum file cannot be parsed.

    ``line`` is the 1-based line number of the offending row (``None`` when the
    problem is not tied to a single line, e.g. an empty eigenvalue section).
    """

    def __init__(self, msg, path=None, line=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{': '.join(where)}: {msg}" if where else msg)
        self.path = path
        self.line = line


class ConvergenceError(GinspectraError, ArithmeticError):
    """Raised when the eigensolver exhausts its iteration budget.

    ``provenance`` describes the matrix that failed (model tag, seed, index...)
    so that the failing realization can be reproduced.
    """

    def __init__(self, msg, provenance=None):
        if provenance:
            msg = f"{msg} [provenance: {provenance}]"
        super().__init__(msg)
        self.provenance = provenance
