"""Exception hierarchy shared by every layer of the package.

Each class carries the process exit code the command line maps it to.
"""

from typing import Any, List, Optional


class VCRNetError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(VCRNetError):
    """Invalid configuration values or unsupported options."""

    exit_code = 2


class CheckpointError(ConfigError):
    """Checkpoint is missing, of another format version, or shape-incompatible."""

    pass


class ShapeError(VCRNetError, ValueError):
    """Tensor extents do not satisfy an operation's contract."""

    exit_code = 2


class DataError(VCRNetError):
    """Input data violates its documented format or value range."""

    exit_code = 3


class ParseError(DataError):
    """A file could not be parsed; carries the byte offset of the failure."""

    def __init__(self, message: str, path: Any = None, offset: int = 0) -> None:
        self.path = path
        self.offset = offset
        where = f"{path}: " if path is not None else ""
        super().__init__(f"{where}{message} (at byte {offset})")


class UndefinedMetricError(DataError):
    """A metric is undefined for the given ground truth (e.g. all-zero map)."""

    pass


class NumericalDivergenceError(VCRNetError):
    """A loss or iterate became non-finite."""

    exit_code = 4

    def __init__(self, message: str, traces: Optional[List[Any]] = None) -> None:
        self.traces = list(traces or [])
        super().__init__(message)


class SolverDivergenceError(NumericalDivergenceError):
    """Fixed-point iteration produced a non-finite iterate."""

    def __init__(self, message: str, trace: Optional[Any] = None) -> None:
        self.trace = trace
        super().__init__(message, [trace] if trace is not None else None)
