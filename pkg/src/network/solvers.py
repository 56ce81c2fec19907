"""Fixed-point solvers on flat float64 vectors.

Both solvers start from the given ``z0``, evaluate ``f`` once per iteration
and record the relative residual ``‖f(z) − z‖ / (‖z‖ + ε)`` of the iterate
they evaluated. A run stops as soon as that residual drops below ``tol`` and
returns the iterate itself; otherwise the iterate with the lowest residual
is returned.
"""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.constants import defaults
from src.models.config import SolverConfig
from src.models.trace import DEQTrace
from src.utils.errors import SolverDivergenceError

logger = logging.getLogger(__name__)

FixedPointMap = Callable[[np.ndarray], np.ndarray]


def relative_residual(z: np.ndarray, fz: np.ndarray) -> float:
    return float(np.linalg.norm(fz - z) / (np.linalg.norm(z) + defaults.RESIDUAL_EPS))


def _evaluate(f: FixedPointMap, z: np.ndarray, trace: DEQTrace, iteration: int) -> np.ndarray:
    fz = np.asarray(f(z), dtype=np.float64)
    if not np.all(np.isfinite(fz)):
        where = f" at {trace.call_site}" if trace.call_site else ""
        raise SolverDivergenceError(
            f"{trace.solver} solve{where} produced non-finite values at iteration {iteration}",
            trace,
        )
    return fz


def picard(
    f: FixedPointMap,
    z0: np.ndarray,
    cfg: SolverConfig,
    trace: DEQTrace,
    record: Optional[List[float]] = None,
) -> Tuple[np.ndarray, bool]:
    """Damped iteration ``z ← (1 − β) z + β f(z)``.

    Returns:
        The solution estimate and whether it met the tolerance.

    Raises:
        SolverDivergenceError: If ``f`` returns NaN or inf.
    """
    record = trace.residuals if record is None else record
    beta = cfg.damping
    z = np.array(z0, dtype=np.float64)
    best, best_residual = z, np.inf
    for k in range(1, cfg.max_iter + 1):
        fz = _evaluate(f, z, trace, k)
        residual = relative_residual(z, fz)
        record.append(residual)
        if residual < best_residual:
            best, best_residual = z, residual
        if residual < cfg.tol:
            return z, True
        z = (1.0 - beta) * z + beta * fz
    return best, False


def _anderson_coefficients(d_g: np.ndarray, g: np.ndarray, max_cond: float) -> Optional[np.ndarray]:
    """Least-squares ``γ = argmin ‖g − ΔG γ‖`` using the most recent columns
    that keep the normal equations well conditioned; None if no column does."""
    for start in range(d_g.shape[1]):
        cols = d_g[:, start:]
        h = cols.T @ cols
        h = h + defaults.ANDERSON_REG * float(np.max(np.diag(h))) * np.eye(h.shape[0])
        cond = np.linalg.cond(h)
        if not np.isfinite(cond) or cond > max_cond:
            continue
        gamma = np.zeros(d_g.shape[1])
        gamma[start:] = np.linalg.solve(h, cols.T @ g)
        return gamma
    return None


def anderson(
    f: FixedPointMap,
    z0: np.ndarray,
    cfg: SolverConfig,
    trace: DEQTrace,
    record: Optional[List[float]] = None,
) -> Tuple[np.ndarray, bool]:
    """Type-II Anderson acceleration with memory ``m`` and mixing ``β``.

    Falls back to the damped step whenever the least-squares system is
    ill-conditioned or the extrapolated iterate is non-finite.

    Raises:
        SolverDivergenceError: If ``f`` returns NaN or inf.
    """
    record = trace.residuals if record is None else record
    beta = cfg.damping
    z = np.array(z0, dtype=np.float64)
    best, best_residual = z, np.inf
    xs: List[np.ndarray] = []
    gs: List[np.ndarray] = []
    for k in range(1, cfg.max_iter + 1):
        fz = _evaluate(f, z, trace, k)
        g = fz - z
        residual = relative_residual(z, fz)
        record.append(residual)
        if residual < best_residual:
            best, best_residual = z, residual
        if residual < cfg.tol:
            return z, True

        xs.append(z)
        gs.append(g)
        if len(xs) > cfg.anderson_memory + 1:
            xs.pop(0)
            gs.pop(0)

        step = z + beta * g
        if len(xs) > 1:
            d_x = np.stack([b - a for a, b in zip(xs[:-1], xs[1:])], axis=1)
            d_g = np.stack([b - a for a, b in zip(gs[:-1], gs[1:])], axis=1)
            gamma = _anderson_coefficients(d_g, g, defaults.ANDERSON_MAX_COND)
            if gamma is None:
                logger.debug(f"anderson: ill-conditioned history at iteration {k}, damped step")
            else:
                candidate = step - (d_x + beta * d_g) @ gamma
                if np.all(np.isfinite(candidate)):
                    step = candidate
                else:
                    logger.debug(f"anderson: non-finite extrapolation at iteration {k}, damped step")
        z = step
    return best, False


SOLVERS = {"anderson": anderson, "picard": picard}


def solve(
    f: FixedPointMap,
    z0: np.ndarray,
    cfg: SolverConfig,
    trace: DEQTrace,
    record: Optional[List[float]] = None,
) -> Tuple[np.ndarray, bool]:
    """Run the solver named by ``cfg.method``."""
    return SOLVERS[cfg.method](f, z0, cfg, trace, record)
