"""Training-time augmentation."""

from dataclasses import replace

import numpy as np

from src.models.annotations import BoundingBox
from src.models.samples import FixationPoints, SamplePair


def _flip_points(points: FixationPoints, width: int) -> FixationPoints:
    return {part: [(width - 1 - x, y) for x, y in pts] for part, pts in points.items()}


def _flip_box(box: BoundingBox, width: int) -> BoundingBox:
    return BoundingBox(x0=width - box.x1, y0=box.y0, x1=width - box.x0, y1=box.y1)


def flip_pair(pair: SamplePair) -> SamplePair:
    """Mirror a pair left to right.

    Images and ground-truth maps are reversed along their last axis, fixation
    points map ``x → W − 1 − x`` and the normalized pose maps ``x → 1 − x``.
    Flipping twice returns the original pair.
    """
    pose = pair.pose.copy()
    pose[:, 0] = 1.0 - pose[:, 0]
    return replace(
        pair,
        image_in=np.ascontiguousarray(pair.image_in[..., ::-1]),
        image_non=np.ascontiguousarray(pair.image_non[..., ::-1]),
        pose=pose,
        gt_in=np.ascontiguousarray(pair.gt_in[..., ::-1]),
        gt_non=np.ascontiguousarray(pair.gt_non[..., ::-1]),
        fixations_in=_flip_points(pair.fixations_in, pair.width),
        fixations_non=_flip_points(pair.fixations_non, pair.image_non.shape[2]),
        bbox_in=_flip_box(pair.bbox_in, pair.width),
        bbox_non=_flip_box(pair.bbox_non, pair.image_non.shape[2]),
    )
