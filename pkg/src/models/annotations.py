"""Models for per-image contact annotations."""

from typing import Dict, List, Tuple

from pydantic import BaseModel, Field, field_validator

from src.constants.parts import PART_ORDER
from src.utils.errors import DataError

Point = Tuple[int, int]


class BoundingBox(BaseModel):
    """Axis-aligned box in integer pixels, inclusive of ``x0, y0`` and exclusive of ``x1, y1``."""

    x0: int
    y0: int
    x1: int
    y1: int

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1


class AnnotationRecord(BaseModel):
    """Contact points of one object instance in one image."""

    image_id: str
    pair_id: str
    role: str  # "interactive" or "non_interactive"
    affordance_label: str
    object_label: str
    width: int
    height: int
    bboxes: List[BoundingBox] = []
    points: Dict[str, List[Point]] = Field(default_factory=dict, validate_default=True)

    @field_validator("points")
    @classmethod
    def fill_all_parts(cls, points: Dict[str, List[Point]]) -> Dict[str, List[Point]]:
        known = {part.value for part in PART_ORDER}
        unknown = sorted(set(points) - known)
        if unknown:
            raise ValueError(f"unknown body parts {unknown}")
        return {
            part.value: [(int(x), int(y)) for x, y in points.get(part.value, [])]
            for part in PART_ORDER
        }

    def check_bounds(self) -> None:
        """Raise DataError naming this record if any point lies outside the image."""
        for part, pts in self.points.items():
            for x, y in pts:
                if not (0 <= x < self.width and 0 <= y < self.height):
                    raise DataError(
                        f"record {self.image_id}: {part} point ({x}, {y}) outside "
                        f"{self.width}×{self.height} image"
                    )

    def active_parts(self) -> List[str]:
        return [part for part, pts in self.points.items() if pts]
