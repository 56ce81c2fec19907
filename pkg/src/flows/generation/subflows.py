"""Dataset generation flow: synthetic pairs, annotations and split manifests."""

from pathlib import Path
from typing import Any, Dict, Union

from prefect import flow, get_run_logger

from src.constants import defaults
from src.constants.parts import Affordance
from src.models.splits import SplitKind
from src.numeric import SplitMix64
from src.tasks.data.dataset import write_annotations, write_pair
from src.tasks.data.splits import build_split
from src.tasks.data.synthetic import generate_synthetic_pair, pair_annotations
from src.utils.errors import ConfigError
from src.utils.io.json import save_json
from src.utils.io.paths import get_annotations_path, get_dataset_info_path, get_manifest_path, pair_id_for


def pair_seed(seed: int, index: int) -> int:
    """Seed of the ``index``-th pair, independent of how many pairs are generated."""
    return int(SplitMix64(seed).spawn(index).next_uint64(1)[0])


@flow(name="generate_dataset")
def dataset_generation_flow(
    out_dir: Union[str, Path], count: int, seed: int = 0, size: int = defaults.IMAGE_SIZE
) -> Dict[str, Any]:
    """
    Generate a synthetic paired dataset.

    Args:
        out_dir: Dataset root, created if needed
        count: Number of pairs; affordance classes are assigned round-robin
        seed: Master seed; the same seed gives byte-identical files
        size: Square image side in pixels

    Flow steps:
        1. Render and write every pair
        2. Write the annotation file
        3. Build one manifest per split kind
        4. Write dataset.json

    Returns:
        Dataset summary as written to dataset.json

    Raises:
        ConfigError: If ``count`` is not positive or ``size`` not a multiple of 32
    """
    logger = get_run_logger()
    if count < 1:
        raise ConfigError(f"--count must be at least 1, got {count}")
    if size < defaults.SIZE_MULTIPLE or size % defaults.SIZE_MULTIPLE:
        raise ConfigError(f"image size must be a positive multiple of {defaults.SIZE_MULTIPLE}, got {size}")
    out_dir = Path(out_dir)
    classes = list(Affordance)
    logger.info(f"Generating {count} pairs of {size}×{size} into {out_dir}")

    # Step 1: Pairs
    records = []
    for index in range(count):
        pair_id = pair_id_for(index)
        pair = generate_synthetic_pair(pair_seed(seed, index), classes[index % len(classes)], size, pair_id)
        write_pair(out_dir, pair)
        records.extend(pair_annotations(pair))

    # Step 2: Annotations
    write_annotations(get_annotations_path(out_dir), records)

    # Step 3: Splits
    manifests = {}
    for kind in SplitKind:
        manifest = build_split(records, kind, seed)
        save_json(get_manifest_path(out_dir, kind.value), manifest.model_dump(mode="json"))
        manifests[kind.value] = {"train": len(manifest.train), "val": len(manifest.val), "test": len(manifest.test)}

    # Step 4: Summary
    info = {
        "count": count,
        "seed": seed,
        "size": size,
        "classes": [c.value for c in classes],
        "splits": manifests,
    }
    save_json(get_dataset_info_path(out_dir), info)
    logger.info(f"✓ Wrote {count} pairs and {len(manifests)} split manifests")
    return info
