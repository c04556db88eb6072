"""Exception hierarchy."""


class SymfluxError(Exception):
    """Base class for every error raised by the package."""


class KernelError(SymfluxError):
    pass


class LaurentError(KernelError):
    """Negative powers where they are not allowed."""


class ParseError(SymfluxError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class SchemeError(SymfluxError):
    """A scheme does not expand to a consistent differential approximation."""


class ReductionError(SymfluxError):
    """Elimination of t-derivatives failed to terminate (internal bug signal)."""


class VerificationError(SymfluxError):
    """A closure certificate or solver self-check failed."""
