"""Synthetic paired scenes: an object glyph with and without a stick figure using it.

The interactive image shows the figure touching the object at the class's
contact loci; the non-interactive image shows another instance of the same
object alone. Contact points become the ground truth for both images.
"""

import logging
from typing import Dict, List, Tuple, Union

import numpy as np
from prefect import task
from prefect.cache_policies import NONE

from src.constants import defaults
from src.constants.parts import (
    ACTIVE_PARTS,
    CONTACT_LOCI,
    NUM_JOINTS,
    NUM_KEY_JOINTS,
    OBJECTS,
    Affordance,
    BodyPart,
)
from src.models.annotations import AnnotationRecord, BoundingBox
from src.models.samples import FixationPoints, SamplePair
from src.numeric import SplitMix64
from src.tasks.data.heatmaps import points_to_heatmaps
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

# Key joints in a standing pose, as offsets from the pelvis in figure heights.
KEY_JOINTS: Tuple[Tuple[float, float], ...] = (
    (0.00, -0.45),  # head
    (0.00, -0.35),  # neck
    (-0.10, -0.33),  # right shoulder
    (-0.15, -0.18),  # right elbow
    (-0.18, -0.05),  # right wrist
    (0.10, -0.33),  # left shoulder
    (0.15, -0.18),  # left elbow
    (0.18, -0.05),  # left wrist
    (0.00, 0.00),  # pelvis
    (-0.06, 0.02),  # right hip
    (-0.07, 0.25),  # right knee
    (-0.07, 0.48),  # right ankle
    (0.06, 0.02),  # left hip
    (0.07, 0.25),  # left knee
    (0.07, 0.48),  # left ankle
)
BONES: Tuple[Tuple[int, int], ...] = (
    (0, 1), (1, 2), (2, 3), (3, 4), (1, 5), (5, 6), (6, 7),
    (1, 8), (8, 9), (9, 10), (10, 11), (8, 12), (12, 13), (13, 14),
)  # fmt: skip
HEAD = 0

# Joint placed on the contact locus of each part. OUTSIDE is the object's own contact.
EFFECTORS: Dict[BodyPart, int] = {
    BodyPart.HAND: 4,
    BodyPart.FEET: 11,
    BodyPart.MOUTH: 0,
    BodyPart.HIPS: 8,
    BodyPart.BACK: 1,
    BodyPart.EYE: 0,
}

FIGURE_COLOUR = np.array([0.12, 0.12, 0.18])
MAX_POINTS_PER_PART = 2
POINT_JITTER = 0.03  # fraction of the box size


def _as_affordance(value: Union[Affordance, str]) -> Affordance:
    try:
        return Affordance(value)
    except ValueError:
        known = ", ".join(a.value for a in Affordance)
        raise ConfigError(f"unknown affordance class {value!r} (expected one of {known})") from None


def _background(rng: SplitMix64, size: int) -> np.ndarray:
    base = rng.uniform(3, 0.75, 0.95)
    ramp = np.linspace(-0.05, 0.05, size)
    image = base[:, None, None] + ramp[None, :, None] + 0.02 * rng.normal((3, size, size))
    return np.clip(image, 0.0, 1.0)


def _place_box(rng: SplitMix64, size: int) -> BoundingBox:
    bw = int(size * rng.scalar(0.3, 0.45))
    bh = int(size * rng.scalar(0.3, 0.45))
    x0 = rng.integer(size // 8, size - bw - size // 8 + 1)
    y0 = rng.integer(size // 8, size - bh - size // 8 + 1)
    return BoundingBox(x0=x0, y0=y0, x1=x0 + bw, y1=y0 + bh)


def _draw_object(image: np.ndarray, box: BoundingBox, affordance: Affordance, colour: np.ndarray) -> None:
    """Filled box with a darker class-specific band so classes differ in appearance."""
    image[:, box.y0 : box.y1, box.x0 : box.x1] = colour[:, None, None]
    index = list(Affordance).index(affordance)
    bw, bh = box.x1 - box.x0, box.y1 - box.y0
    band = colour[:, None, None] * 0.55
    if index % 2:
        top = box.y0 + bh * (index + 1) // (len(Affordance) + 2)
        image[:, top : top + max(bh // 6, 1), box.x0 : box.x1] = band
    else:
        left = box.x0 + bw * (index + 1) // (len(Affordance) + 2)
        image[:, box.y0 : box.y1, left : left + max(bw // 6, 1)] = band


def _contact_points(
    rng: SplitMix64, box: BoundingBox, affordance: Affordance
) -> FixationPoints:
    """Up to two jittered points per active part, all inside the box."""
    bw, bh = box.x1 - box.x0, box.y1 - box.y0
    points: FixationPoints = {}
    for part in ACTIVE_PARTS[affordance]:
        u, v = CONTACT_LOCI[affordance][part]
        cx, cy = box.x0 + u * bw, box.y0 + v * bh
        count = rng.integer(1, MAX_POINTS_PER_PART + 1)
        jitter = rng.uniform((count, 2), -POINT_JITTER, POINT_JITTER) * np.array([bw, bh])
        points[part.value] = [
            (
                int(np.clip(round(cx + dx), box.x0, box.x1 - 1)),
                int(np.clip(round(cy + dy), box.y0, box.y1 - 1)),
            )
            for dx, dy in jitter
        ]
    return points


def _key_joints(
    rng: SplitMix64, box: BoundingBox, affordance: Affordance, size: int
) -> np.ndarray:
    """Pixel positions of the 15 key joints with effectors on their contact loci."""
    height = size * rng.scalar(0.45, 0.6)
    offsets = np.array(KEY_JOINTS) * height
    bw, bh = box.x1 - box.x0, box.y1 - box.y0
    targets = {
        EFFECTORS[part]: np.array([box.x0 + u * bw, box.y0 + v * bh])
        for part, (u, v) in CONTACT_LOCI[affordance].items()
        if part in EFFECTORS
    }
    root = np.mean([target - offsets[joint] for joint, target in targets.items()], axis=0)
    joints = root + offsets
    for joint, target in targets.items():
        joints[joint] = target
    return np.clip(joints, 0, size - 1)


def expand_joints(key: np.ndarray) -> np.ndarray:
    """53 joints: the key joints followed by points interpolated along the bones.

    Bone ``b`` receives the ``k``-th surplus joint when ``k % len(BONES) == b``,
    so earlier bones carry one more sample than later ones.
    """
    surplus = NUM_JOINTS - NUM_KEY_JOINTS
    per_bone = [len(range(b, surplus, len(BONES))) for b in range(len(BONES))]
    extra = []
    for k in range(surplus):
        b = k % len(BONES)
        t = (k // len(BONES) + 1) / (per_bone[b] + 1)
        start, end = BONES[b]
        extra.append((1 - t) * key[start] + t * key[end])
    return np.concatenate([key, np.array(extra)], axis=0)


def _draw_figure(image: np.ndarray, key: np.ndarray, size: int) -> None:
    thickness = max(size // 64, 1)
    _, h, w = image.shape
    for start, end in BONES:
        length = float(np.hypot(*(key[end] - key[start])))
        for t in np.linspace(0.0, 1.0, max(int(length) * 2, 2)):
            x, y = np.round((1 - t) * key[start] + t * key[end]).astype(int)
            image[:, max(y - thickness, 0) : y + thickness + 1, max(x - thickness, 0) : x + thickness + 1] = (
                FIGURE_COLOUR[:, None, None]
            )
    radius = max(size // 28, 2)
    yy, xx = np.mgrid[0:h, 0:w]
    head = (xx - key[HEAD][0]) ** 2 + (yy - key[HEAD][1]) ** 2 <= radius**2
    image[:, head] = FIGURE_COLOUR[:, None]


def _scene(
    rng: SplitMix64, affordance: Affordance, size: int
) -> Tuple[np.ndarray, BoundingBox, FixationPoints]:
    image = _background(rng.spawn(1), size)
    box = _place_box(rng.spawn(2), size)
    colour = rng.spawn(3).uniform(3, 0.2, 0.9)
    _draw_object(image, box, affordance, colour)
    return image, box, _contact_points(rng.spawn(4), box, affordance)


@task(name="generate_synthetic_pair", cache_policy=NONE)
def generate_synthetic_pair(
    seed: int,
    affordance: Union[Affordance, str],
    size: int = defaults.IMAGE_SIZE,
    pair_id: str = "",
) -> SamplePair:
    """Render one paired scene.

    Args:
        seed: Determines every random choice; the same seed gives a bit-identical pair
        affordance: Synthetic affordance class
        size: Square image side in pixels
        pair_id: Identifier stored on the pair

    Returns:
        SamplePair with pose x/y at pixel centres normalized by ``size``

    Raises:
        ConfigError: If the class is not in the synthetic vocabulary
    """
    affordance = _as_affordance(affordance)
    rng = SplitMix64(seed)
    object_label = rng.spawn(1).choice(OBJECTS[affordance])

    image_in, box_in, fix_in = _scene(rng.spawn(2), affordance, size)
    image_non, box_non, fix_non = _scene(rng.spawn(3), affordance, size)

    key = _key_joints(rng.spawn(4), box_in, affordance, size)
    _draw_figure(image_in, key, size)
    joints = expand_joints(key)
    depth = rng.spawn(5).normal(NUM_JOINTS, std=0.05)
    pose = np.concatenate([(joints + 0.5) / size, depth[:, None]], axis=1)

    pair = SamplePair(
        pair_id=pair_id or f"seed_{seed}",
        affordance=affordance.value,
        object_label=object_label,
        image_in=image_in,
        image_non=image_non,
        pose=pose,
        gt_in=points_to_heatmaps(fix_in, size, size, f"{pair_id}/interactive"),
        gt_non=points_to_heatmaps(fix_non, size, size, f"{pair_id}/non_interactive"),
        fixations_in=fix_in,
        fixations_non=fix_non,
        bbox_in=box_in,
        bbox_non=box_non,
    )
    logger.debug(f"Generated {pair.pair_id}: {affordance.value} / {object_label}")
    return pair


def pair_annotations(pair: SamplePair) -> List[AnnotationRecord]:
    """The interactive and non-interactive annotation records of a pair."""
    records = []
    for role, points, box in (
        ("interactive", pair.fixations_in, pair.bbox_in),
        ("non_interactive", pair.fixations_non, pair.bbox_non),
    ):
        records.append(
            AnnotationRecord(
                image_id=f"{pair.pair_id}/{role}",
                pair_id=pair.pair_id,
                role=role,
                affordance_label=pair.affordance,
                object_label=pair.object_label,
                width=pair.width,
                height=pair.height,
                bboxes=[box],
                points=points,
            )
        )
    return records
