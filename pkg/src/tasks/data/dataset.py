"""Tasks for reading and writing sample pairs and annotation files."""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Union

import numpy as np
from prefect import task
from prefect.cache_policies import NONE
from pydantic import ValidationError

from src.models.annotations import AnnotationRecord, BoundingBox
from src.models.samples import SamplePair
from src.utils.errors import DataError, ParseError
from src.utils.io.images import read_image, write_image
from src.utils.io.json import load_json, save_json
from src.utils.io.paths import (
    GT_IN_FILE,
    GT_NON_FILE,
    INTERACTIVE_IMAGE,
    NON_INTERACTIVE_IMAGE,
    POSE_FILE,
    ensure_pair_dir,
    get_annotations_path,
    get_pair_dir,
)
from src.utils.io.tensors import read_tensor, write_tensor

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def write_heatmap(path: PathLike, heatmap: np.ndarray) -> None:
    """Write one or more heatmaps as a TNSR file.

    Raises:
        DataError: If any value lies outside [0, 1]
    """
    heatmap = np.asarray(heatmap)
    if heatmap.size and (heatmap.min() < 0.0 or heatmap.max() > 1.0):
        raise DataError(f"{path}: heatmap values must lie in [0, 1]")
    write_tensor(path, heatmap)


def read_heatmap(path: PathLike) -> np.ndarray:
    return read_tensor(path)


def write_annotations(path: PathLike, records: Iterable[AnnotationRecord]) -> None:
    save_json(path, [record.model_dump(mode="json") for record in records])


def load_annotations(path: PathLike) -> List[AnnotationRecord]:
    """Load and validate an annotation file.

    Args:
        path: JSON file holding a list of records

    Returns:
        Records with every body part present (absent parts have no points)

    Raises:
        ParseError: If the file is not valid JSON or not a list
        DataError: If a record does not validate, naming its position
    """
    raw = load_json(path)
    if not isinstance(raw, list):
        raise ParseError("annotation file must hold a JSON list", path, 0)
    records = []
    for index, item in enumerate(raw):
        try:
            records.append(AnnotationRecord.model_validate(item))
        except ValidationError as e:
            raise DataError(f"{path}: record {index} is invalid: {e}") from None
    logger.debug(f"Loaded {len(records)} annotation records from {path}")
    return records


def group_records(records: Iterable[AnnotationRecord]) -> Dict[str, Dict[str, AnnotationRecord]]:
    """Records keyed by pair id, then by role."""
    grouped: Dict[str, Dict[str, AnnotationRecord]] = {}
    for record in records:
        grouped.setdefault(record.pair_id, {})[record.role] = record
    return grouped


@task(name="write_pair", cache_policy=NONE)
def write_pair(data_dir: PathLike, pair: SamplePair) -> Path:
    """Write the images, pose and ground truth of one pair; returns its directory."""
    pair_dir = ensure_pair_dir(data_dir, pair.pair_id)
    write_image(pair_dir / INTERACTIVE_IMAGE, pair.image_in)
    write_image(pair_dir / NON_INTERACTIVE_IMAGE, pair.image_non)
    write_tensor(pair_dir / POSE_FILE, pair.pose)
    write_heatmap(pair_dir / GT_IN_FILE, pair.gt_in)
    write_heatmap(pair_dir / GT_NON_FILE, pair.gt_non)
    return pair_dir


def _box(record: AnnotationRecord) -> BoundingBox:
    return record.bboxes[0] if record.bboxes else BoundingBox(x0=0, y0=0, x1=record.width, y1=record.height)


def load_pair(data_dir: PathLike, records: Dict[str, AnnotationRecord]) -> SamplePair:
    """Read one pair from disk.

    Args:
        data_dir: Dataset root
        records: The pair's records keyed by role (``interactive``, ``non_interactive``)

    Raises:
        DataError: If a file is missing or a record is absent
    """
    try:
        rec_in, rec_non = records["interactive"], records["non_interactive"]
    except KeyError as e:
        raise DataError(f"pair is missing its {e.args[0]} annotation record") from None
    pair_dir = get_pair_dir(data_dir, rec_in.pair_id)
    return SamplePair(
        pair_id=rec_in.pair_id,
        affordance=rec_in.affordance_label,
        object_label=rec_in.object_label,
        image_in=read_image(pair_dir / INTERACTIVE_IMAGE),
        image_non=read_image(pair_dir / NON_INTERACTIVE_IMAGE),
        pose=read_tensor(pair_dir / POSE_FILE).astype(np.float64),
        gt_in=read_heatmap(pair_dir / GT_IN_FILE).astype(np.float64),
        gt_non=read_heatmap(pair_dir / GT_NON_FILE).astype(np.float64),
        fixations_in=dict(rec_in.points),
        fixations_non=dict(rec_non.points),
        bbox_in=_box(rec_in),
        bbox_non=_box(rec_non),
    )


@task(name="load_pairs", cache_policy=NONE)
def load_pairs(data_dir: PathLike, pair_ids: Iterable[str]) -> List[SamplePair]:
    """Load the listed pairs using the dataset's annotation file."""
    grouped = group_records(load_annotations(get_annotations_path(data_dir)))
    pairs = []
    for pair_id in pair_ids:
        if pair_id not in grouped:
            raise DataError(f"pair {pair_id} has no annotations in {data_dir}")
        pairs.append(load_pair(data_dir, grouped[pair_id]))
    logger.info(f"Loaded {len(pairs)} pairs from {data_dir}")
    return pairs
