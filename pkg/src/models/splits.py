"""Models for dataset split manifests."""

from enum import Enum
from typing import Dict, List

from pydantic import BaseModel


class SplitKind(str, Enum):
    """Evaluation settings, by what train and test must not share"""

    SEEN = "seen"  # id-level partition, categories overlap
    OBJ_UNSEEN = "obj_unseen"  # object labels disjoint
    AFF_UNSEEN = "aff_unseen"  # affordance labels disjoint


class SplitManifest(BaseModel):
    """Train/val/test pair ids and the label partition that produced them."""

    kind: SplitKind
    seed: int
    train: List[str]
    val: List[str]
    test: List[str]
    partition: Dict[str, List[str]] = {}  # "train" / "held_out" label lists

    def ids(self, subset: str) -> List[str]:
        if subset not in ("train", "val", "test"):
            raise ValueError(f"unknown subset {subset}")
        return list(getattr(self, subset))
