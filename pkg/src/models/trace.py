"""Fixed-point solve diagnostics."""

from dataclasses import dataclass, field
from typing import List, Optional


@dataclass
class DEQTrace:
    """Per-call record of a fixed-point solve.

    ``residuals[k]`` is the relative residual after iteration ``k + 1``, so the
    iteration count is the length of the sequence.
    """

    solver: str
    tol: float
    residuals: List[float] = field(default_factory=list)
    call_site: str = ""
    warnings: List[str] = field(default_factory=list)
    adjoint_residuals: List[float] = field(default_factory=list)
    adjoint_converged: Optional[bool] = None

    @property
    def iterations(self) -> int:
        return len(self.residuals)

    @property
    def converged(self) -> bool:
        return bool(self.residuals) and self.residuals[-1] < self.tol

    @property
    def last_residual(self) -> float:
        return self.residuals[-1] if self.residuals else float("nan")

    def warn(self, message: str) -> None:
        self.warnings.append(message)
