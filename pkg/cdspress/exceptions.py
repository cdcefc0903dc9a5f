from typing import Optional


class InvalidArgument(ValueError):
    """An operation was called with arguments outside of its domain."""

    pass


class FormatError(SyntaxError):
    """Exception to be used when input provided by the user cannot be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.line_number = line_number

    def __str__(self) -> str:
        if self.line_number is None:
            return self.message
        return f"line {self.line_number}: {self.message}"


class FastaFormatError(FormatError):
    """Malformed FASTA stream."""

    pass


class AnnotationFormatError(FormatError):
    """Malformed BED-like annotation record."""

    pass


class ParameterFormatError(FormatError):
    """Parameter or measure JSON document that cannot be loaded."""

    pass


class InsufficientData(ValueError):
    """The input holds too little data for the requested quantity to be defined."""

    pass


class UndefinedCorrelation(ArithmeticError):
    """Correlation requested for a constant or too short series."""

    def __init__(self, reason: str):
        self.reason = reason

    def __str__(self) -> str:
        return f"Correlation is undefined: {self.reason}"


class ConvergenceError(ArithmeticError):
    """Iterative numerical procedure did not reach its tolerance."""

    def __init__(self, procedure: str, iterations: int, residual: float):
        self.procedure = procedure
        self.iterations = iterations
        self.residual = residual

    def __str__(self) -> str:
        return (
            f"{self.procedure} did not converge after {self.iterations} "
            f"iterations (residual {self.residual:.3e})"
        )


class ResourceNotFound(FileNotFoundError):
    """General Exception representing an input file that cannot be found."""

    def __init__(self, resource_name: str):
        self.resource_name = resource_name

    def __str__(self) -> str:
        return f"Input {self.resource_name} could not be found."


class UsageError(Exception):
    """Command line used incorrectly."""

    pass
