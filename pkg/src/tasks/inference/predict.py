"""Tasks for predicting part heatmaps and exporting them with overlays."""

import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from prefect import task
from prefect.cache_policies import NONE

from src.constants.parts import NUM_JOINTS, PART_ORDER
from src.network.vcrnet import VCRNet
from src.numeric import Tensor, no_grad
from src.tasks.data.dataset import write_heatmap
from src.tasks.evaluation.evaluate import upsample_prediction
from src.utils.errors import DataError
from src.utils.io.images import write_image

logger = logging.getLogger(__name__)

OVERLAY_ALPHA = 0.5
OVERLAY_COLOUR = np.array([1.0, 0.0, 0.0])


def overlay(image: np.ndarray, heatmap: np.ndarray, alpha: float = OVERLAY_ALPHA) -> np.ndarray:
    """Alpha-blend a red-scale rendering of ``heatmap`` over a ``3×H×W`` image."""
    if heatmap.shape != image.shape[1:]:
        heatmap = upsample_prediction(heatmap[None], *image.shape[1:])[0]
    coloured = np.clip(heatmap, 0.0, 1.0)[None] * OVERLAY_COLOUR[:, None, None]
    return (1.0 - alpha) * image + alpha * coloured


@task(name="predict_pair", cache_policy=NONE)
def predict_pair(
    model: VCRNet, image_in: np.ndarray, image_non: np.ndarray, pose: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Interactive and non-interactive heatmaps at each image's resolution.

    Raises:
        DataError: If the pose is not 53×3
    """
    if pose.shape != (NUM_JOINTS, 3):
        raise DataError(f"pose must be {NUM_JOINTS}×3, got {pose.shape}")
    with no_grad():
        out = model(Tensor(image_in), Tensor(image_non), Tensor(pose))
    d_in = upsample_prediction(out.shp.d_in.data, *image_in.shape[1:])
    d_non = upsample_prediction(out.gat.d_non.data, *image_non.shape[1:])
    return d_in, d_non


@task(name="write_predictions", cache_policy=NONE)
def write_predictions(
    out_dir: Union[str, Path],
    image_in: np.ndarray,
    image_non: np.ndarray,
    d_in: np.ndarray,
    d_non: np.ndarray,
) -> List[Path]:
    """One TNSR heatmap and one PPM overlay per branch and part (14 of each)."""
    out_dir = Path(out_dir)
    written = []
    for branch, image, maps in (("d_in", image_in, d_in), ("d_non", image_non, d_non)):
        for k, part in enumerate(PART_ORDER):
            heatmap_path = out_dir / f"{branch}_{part.value}.tnsr"
            write_heatmap(heatmap_path, np.clip(maps[k], 0.0, 1.0))
            overlay_path = out_dir / f"{branch}_{part.value}_overlay.ppm"
            write_image(overlay_path, overlay(image, maps[k]))
            written.extend([heatmap_path, overlay_path])
    logger.info(f"✓ Wrote {len(written)} prediction files to {out_dir}")
    return written
