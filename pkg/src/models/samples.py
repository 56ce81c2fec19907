"""In-memory training sample."""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from src.constants.parts import PART_ORDER
from src.models.annotations import BoundingBox

FixationPoints = Dict[str, List[Tuple[int, int]]]


@dataclass
class SamplePair:
    """One interactive and one non-interactive image of the same affordance class.

    Images are ``3×H×W`` in [0, 1]; ``pose`` is ``53×3`` with x/y at pixel centres normalized by
    the interactive image size; ``gt_in``/``gt_non`` are ``7×H×W`` part
    heatmaps; fixation points are the raw annotation points in pixels.
    """

    pair_id: str
    affordance: str
    object_label: str
    image_in: np.ndarray
    image_non: np.ndarray
    pose: np.ndarray
    gt_in: np.ndarray
    gt_non: np.ndarray
    fixations_in: FixationPoints = field(default_factory=dict)
    fixations_non: FixationPoints = field(default_factory=dict)
    bbox_in: BoundingBox = field(default_factory=lambda: BoundingBox(x0=0, y0=0, x1=0, y1=0))
    bbox_non: BoundingBox = field(default_factory=lambda: BoundingBox(x0=0, y0=0, x1=0, y1=0))

    @property
    def height(self) -> int:
        return int(self.image_in.shape[1])

    @property
    def width(self) -> int:
        return int(self.image_in.shape[2])

    def active_parts(self) -> List[int]:
        """Channel indices with at least one non-interactive fixation."""
        return [i for i, part in enumerate(PART_ORDER) if self.fixations_non.get(part.value)]
