"""
Error categories shared by services, ingestion and the CLI
"""
from typing import Optional


class ConfigurationError(ValueError):
    """Invalid model/chain configuration or mismatched dimensions"""


class DataFormatError(ValueError):
    """Unparsable incidence or label file"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" if column is None else f"line {line}, column {column}"
            message = f"{where}: {message}"
        super().__init__(message)


class NumericalError(RuntimeError):
    """Likelihood evaluation collapsed (all heir clusters impossible, zero mixture density)"""

    def __init__(self, message: str, iteration: Optional[int] = None, unit: Optional[int] = None):
        self.detail = message
        self.iteration = iteration
        self.unit = unit
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
