"""Finite-difference verification of reverse-mode gradients."""

import logging
from typing import Callable, Optional, Sequence, Union

import numpy as np

from src.numeric.rng import SplitMix64
from src.numeric.tensor import Tensor, backward, no_grad
from src.utils.errors import ShapeError

logger = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-8


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), DENOMINATOR_FLOOR)


def sample_indices(size: int, count: int, seed: int = 0) -> np.ndarray:
    """Pick ``count`` distinct flat coordinates out of ``size`` (all if fewer)."""
    if count >= size:
        return np.arange(size)
    return np.sort(SplitMix64(seed).permutation(size)[:count])


def grad_check(
    f: Callable[[Tensor], Tensor],
    x: Union[Tensor, np.ndarray],
    h: float = 1e-5,
    indices: Optional[Sequence[int]] = None,
) -> float:
    """Compare the analytic gradient of scalar ``f`` at ``x`` with central differences.

    Args:
        f: Scalar-valued tensor function.
        x: Evaluation point.
        h: Finite-difference step.
        indices: Flat coordinates to check; all coordinates by default.

    Returns:
        Maximum relative error over the checked coordinates, with denominator
        ``max(|analytic|, |numeric|, 1e-8)``.
    """
    point = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    leaf = Tensor(point.copy(), requires_grad=True)
    out = f(leaf)
    if out.size != 1:
        raise ShapeError(f"grad_check needs a scalar function, got shape {out.shape}")
    backward(out)
    assert leaf.grad is not None
    analytic = leaf.grad.reshape(-1)

    flat = point.reshape(-1)
    coords = range(flat.size) if indices is None else indices
    worst = 0.0
    with no_grad():
        for i in coords:
            shifted = flat.copy()
            shifted[i] += h
            f_plus = f(Tensor(shifted.reshape(point.shape))).item()
            shifted[i] -= 2 * h
            f_minus = f(Tensor(shifted.reshape(point.shape))).item()
            numeric = (f_plus - f_minus) / (2 * h)
            worst = max(worst, relative_error(float(analytic[i]), numeric))
    logger.debug(f"grad_check over {len(coords)} coordinates: max rel err {worst:.3e}")
    return worst
