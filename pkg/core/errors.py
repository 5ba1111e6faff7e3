"""Exception hierarchy shared by the library, the pipeline and the CLI."""
from typing import Optional, Sequence


class DoubleProbeError(Exception):
    """Base class for every error raised on purpose by doubleprobe."""


class StructuralError(DoubleProbeError, ValueError):
    """Malformed input: non-square or non-finite matrices, broken axioms, bad files."""


class PreconditionError(DoubleProbeError, ValueError):
    """An operation was called outside its domain (r <= 0, K < 1, ...)."""


class CapExceededError(DoubleProbeError):
    """A configured size cap would be exceeded."""


class ConvergenceError(DoubleProbeError):
    def __init__(self, message: str, best_residual: float, target: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.best_residual = best_residual
        self.target = None if target is None else [float(t) for t in target]
