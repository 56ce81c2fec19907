"""Body parts and the synthetic affordance vocabulary."""

from enum import Enum
from typing import Dict, List, Tuple


class BodyPart(str, Enum):
    """Body parts whose contact with an object is supervised, in channel order"""

    HAND = "hand"
    FEET = "feet"
    MOUTH = "mouth"
    HIPS = "hips"
    BACK = "back"
    EYE = "eye"
    OUTSIDE = "outside"  # object's contact with the outside world, not the person


PART_ORDER: List[BodyPart] = list(BodyPart)
NUM_PARTS = len(PART_ORDER)
PART_INDEX: Dict[str, int] = {part.value: i for i, part in enumerate(PART_ORDER)}

NUM_JOINTS = 53
NUM_KEY_JOINTS = 15


class Affordance(str, Enum):
    """Affordance classes rendered by the synthetic generator"""

    SIT = "sit"
    LIE = "lie"
    RIDE = "ride"
    DRINK = "drink"
    KICK = "kick"
    WATCH = "watch"
    CUT = "cut"


# Each class activates a distinct subset of parts.
ACTIVE_PARTS: Dict[Affordance, Tuple[BodyPart, ...]] = {
    Affordance.SIT: (BodyPart.HIPS, BodyPart.BACK),
    Affordance.LIE: (BodyPart.FEET, BodyPart.HIPS, BodyPart.BACK),
    Affordance.RIDE: (BodyPart.HAND, BodyPart.FEET, BodyPart.HIPS),
    Affordance.DRINK: (BodyPart.HAND, BodyPart.MOUTH),
    Affordance.KICK: (BodyPart.FEET, BodyPart.OUTSIDE),
    Affordance.WATCH: (BodyPart.EYE,),
    Affordance.CUT: (BodyPart.HAND, BodyPart.OUTSIDE),
}

OBJECTS: Dict[Affordance, Tuple[str, str]] = {
    Affordance.SIT: ("chair", "bench"),
    Affordance.LIE: ("bed", "sofa"),
    Affordance.RIDE: ("bicycle", "horse"),
    Affordance.DRINK: ("cup", "bottle"),
    Affordance.KICK: ("football", "box"),
    Affordance.WATCH: ("monitor", "television"),
    Affordance.CUT: ("knife", "scissors"),
}

# Contact loci as (u, v) fractions of the object's bounding box.
CONTACT_LOCI: Dict[Affordance, Dict[BodyPart, Tuple[float, float]]] = {
    Affordance.SIT: {BodyPart.HIPS: (0.55, 0.55), BodyPart.BACK: (0.15, 0.25)},
    Affordance.LIE: {
        BodyPart.FEET: (0.85, 0.35),
        BodyPart.HIPS: (0.5, 0.35),
        BodyPart.BACK: (0.3, 0.35),
    },
    Affordance.RIDE: {
        BodyPart.HAND: (0.85, 0.15),
        BodyPart.FEET: (0.5, 0.85),
        BodyPart.HIPS: (0.4, 0.3),
    },
    Affordance.DRINK: {BodyPart.HAND: (0.5, 0.6), BodyPart.MOUTH: (0.2, 0.1)},
    Affordance.KICK: {BodyPart.FEET: (0.15, 0.5), BodyPart.OUTSIDE: (0.5, 0.9)},
    Affordance.WATCH: {BodyPart.EYE: (0.5, 0.4)},
    Affordance.CUT: {BodyPart.HAND: (0.15, 0.5), BodyPart.OUTSIDE: (0.8, 0.55)},
}

ALL_OBJECTS: List[str] = [name for names in OBJECTS.values() for name in names]
OBJECT_AFFORDANCE: Dict[str, Affordance] = {
    name: affordance for affordance, names in OBJECTS.items() for name in names
}
