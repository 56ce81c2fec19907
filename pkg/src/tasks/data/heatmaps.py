"""Tasks for turning contact points into part heatmaps."""

import logging
import math
from typing import Dict, List, Sequence, Tuple

import numpy as np
from prefect import task
from prefect.cache_policies import NONE
from scipy.ndimage import convolve1d

from src.constants import defaults
from src.constants.parts import PART_ORDER
from src.models.annotations import AnnotationRecord
from src.utils.errors import DataError, ShapeError

logger = logging.getLogger(__name__)

Point = Tuple[int, int]


def kernel_size(h: int, w: int) -> int:
    """Gaussian kernel size for an ``h×w`` image.

    ``√(h² + w²) / 3`` rounded down to the nearest odd integer, never below 3.
    A 224×224 image gives 105.
    """
    if h < 1 or w < 1:
        raise ShapeError(f"image size must be positive, got {h}×{w}")
    ks = int(math.floor(math.hypot(h, w) / defaults.KERNEL_DIVISOR))
    if ks % 2 == 0:
        ks -= 1
    return max(ks, defaults.MIN_KERNEL_SIZE)


def gaussian_kernel(size: int) -> np.ndarray:
    """Normalized 1-D Gaussian with standard deviation ``size / 6``."""
    sigma = size * defaults.SIGMA_FRACTION
    x = np.arange(size, dtype=np.float64) - size // 2
    kernel = np.exp(-(x**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


def points_to_heatmap(points: Sequence[Point], h: int, w: int, record_id: str = "") -> np.ndarray:
    """Blur unit impulses at ``points`` and min-max normalize to [0, 1].

    Args:
        points: ``(x, y)`` pixel coordinates, origin top-left
        h: Image height
        w: Image width
        record_id: Named in the error for out-of-bounds points

    Returns:
        ``h×w`` map; all zeros when there are no points, otherwise min 0 and max 1

    Raises:
        DataError: If a point lies outside the image
    """
    mask = np.zeros((h, w), dtype=np.float64)
    for x, y in points:
        if not (0 <= x < w and 0 <= y < h):
            raise DataError(f"record {record_id or '?'}: point ({x}, {y}) outside {w}×{h} image")
        mask[int(y), int(x)] = 1.0
    if not points:
        return mask

    kernel = gaussian_kernel(kernel_size(h, w))
    blurred = convolve1d(mask, kernel, axis=0, mode="constant")
    blurred = convolve1d(blurred, kernel, axis=1, mode="constant")
    lo, hi = blurred.min(), blurred.max()
    if hi <= lo:
        return np.ones_like(blurred)
    return (blurred - lo) / (hi - lo)


def points_to_heatmaps(points: Dict[str, List[Point]], h: int, w: int, record_id: str = "") -> np.ndarray:
    """Stack one normalized heatmap per body part in channel order: ``7×h×w``."""
    return np.stack(
        [points_to_heatmap(points.get(part.value, []), h, w, record_id) for part in PART_ORDER]
    )


@task(name="render_heatmaps", cache_policy=NONE)
def render_heatmaps(record: AnnotationRecord) -> np.ndarray:
    """Ground-truth part heatmaps for one annotation record."""
    record.check_bounds()
    maps = points_to_heatmaps(record.points, record.height, record.width, record.image_id)
    logger.debug(f"Rendered {len(record.active_parts())} active parts for {record.image_id}")
    return maps


def downsample_heatmaps(maps: np.ndarray, factor: int) -> np.ndarray:
    """Area-average ``k×H×W`` maps by ``factor`` on both axes.

    Raises:
        ShapeError: If ``H`` or ``W`` is not divisible by ``factor``
    """
    k, h, w = maps.shape
    if h % factor or w % factor:
        raise ShapeError(f"downsample_heatmaps: {h}×{w} not divisible by {factor}")
    return maps.reshape(k, h // factor, factor, w // factor, factor).mean(axis=(2, 4))


def binarize(maps: np.ndarray, threshold: float = defaults.MASK_THRESHOLD) -> np.ndarray:
    """Binary part masks as floats."""
    return (np.asarray(maps) > threshold).astype(np.float64)
