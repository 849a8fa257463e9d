from typing import Optional
import numpy as np


class CisaLabError(Exception):
    pass


class InvalidQueryError(CisaLabError):
    pass


class DagError(CisaLabError):
    pass


class DagParseError(DagError):
    def __init__(self, message: str, lineNumber: int):
        super().__init__(f"line {lineNumber}: {message}")
        self.lineNumber = lineNumber


class DomainError(CisaLabError):
    pass


class ConfigurationError(CisaLabError):
    pass


class UndefinedConditionalError(CisaLabError):
    pass


class ReweightingError(CisaLabError):
    pass


class DegenerateError(CisaLabError):
    pass


class DivergenceError(CisaLabError):
    def __init__(self, message: str, iterate: Optional[np.ndarray] = None):
        if iterate is not None:
            message = f"{message} (last iterate: {np.array2string(iterate, precision=6)})"
        super().__init__(message)
        self.iterate = iterate
