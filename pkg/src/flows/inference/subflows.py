"""Inference flow: part heatmaps and overlays for one image pair."""

from pathlib import Path
from typing import Any, Dict, Union

from prefect import flow, get_run_logger

from src.tasks.inference.predict import predict_pair, write_predictions
from src.tasks.training.checkpoint import restore_training_state
from src.utils.errors import DataError
from src.utils.io.images import read_image
from src.utils.io.tensors import read_tensor


@flow(name="predict_affordance")
def inference_flow(
    checkpoint: Union[str, Path],
    interactive_image: Union[str, Path],
    non_interactive_image: Union[str, Path],
    pose: Union[str, Path],
    out_dir: Union[str, Path],
) -> Dict[str, Any]:
    """
    Predict contact heatmaps for an interactive/non-interactive image pair.

    Args:
        checkpoint: Checkpoint directory
        interactive_image: PPM of the person using the object
        non_interactive_image: PPM of the object alone
        pose: TNSR file with the 53×3 normalized pose of the interactive image
        out_dir: Directory for the 14 heatmaps and 14 overlays

    Returns:
        Summary with the written paths and the checkpoint seed

    Raises:
        DataError: If the pose file is missing or malformed
    """
    logger = get_run_logger()
    if not Path(pose).exists():
        raise DataError(f"{pose}: pose file not found; a pose is required for inference")
    model, _, config, _ = restore_training_state(checkpoint)
    image_in = read_image(interactive_image)
    image_non = read_image(non_interactive_image)
    joints = read_tensor(pose).astype("float64")

    d_in, d_non = predict_pair(model, image_in, image_non, joints)
    written = write_predictions(out_dir, image_in, image_non, d_in, d_non)
    logger.info(f"✓ Predicted {len(written) // 2} heatmaps into {out_dir}")
    return {"out_dir": Path(out_dir), "files": written, "seed": config.seed}
