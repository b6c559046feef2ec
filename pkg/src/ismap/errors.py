class IsmapError(Exception):
    """Base class for package errors."""


class ParameterError(IsmapError, ValueError):
    """Invalid parameter or configuration value."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(IsmapError, ValueError):
    """Malformed input file; ``row`` is 1-based over data rows."""

    def __init__(self, row, message):
        self.row = row
        super().__init__(f"row {row}: {message}")


class NumericalAbort(IsmapError, FloatingPointError):
    """Optimisation produced a non-finite value."""
