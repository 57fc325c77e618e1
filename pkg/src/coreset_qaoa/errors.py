"""
Exception hierarchy for coreset-qaoa.

Every error carries the process exit code the command line reports for it:

- 2: Invalid arguments
- 65: Failed to read an input file
- 66: Computation failed
- 67: Output write error
"""

from typing import Optional


EXIT_OK = 0
EXIT_INVALID_ARGUMENTS = 2
EXIT_INPUT_ERROR = 65
EXIT_COMPUTATION_ERROR = 66
EXIT_OUTPUT_ERROR = 67


class CoresetQaoaError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = EXIT_COMPUTATION_ERROR


class InvalidArgumentError(CoresetQaoaError, ValueError):
    """A precondition on an argument does not hold."""

    exit_code = EXIT_INVALID_ARGUMENTS


class DimensionMismatchError(InvalidArgumentError):
    """Point dimensions or vector lengths disagree."""


class DataFileError(CoresetQaoaError):
    """An input file could not be read or parsed."""

    exit_code = EXIT_INPUT_ERROR

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class EmptyFileError(DataFileError):
    """The input file holds no data rows."""


class RaggedRowError(DataFileError):
    """A row has a different number of columns than the first row."""

    def __init__(self, row: int, expected: int, found: int, path: Optional[str] = None):
        self.row = row
        self.expected = expected
        self.found = found
        super().__init__(
            f"row {row}: expected {expected} columns, found {found}", path
        )


class NonNumericCellError(DataFileError):
    """A cell could not be parsed as a float."""

    def __init__(self, row: int, column: int, text: str, path: Optional[str] = None):
        self.row = row
        self.column = column
        super().__init__(f"row {row}, column {column}: not a number: {text!r}", path)


class NonFiniteValueError(DataFileError):
    """A cell parsed to NaN or infinity."""

    def __init__(self, row: int, column: int, path: Optional[str] = None):
        self.row = row
        self.column = column
        super().__init__(f"row {row}, column {column}: value is not finite", path)


class SchemaError(DataFileError):
    """A JSON document is missing fields or has fields of the wrong type."""


class ComputationError(CoresetQaoaError):
    """A numerical routine violated one of its own invariants."""

    exit_code = EXIT_COMPUTATION_ERROR


class OutputError(CoresetQaoaError):
    """A result file could not be written."""

    exit_code = EXIT_OUTPUT_ERROR
