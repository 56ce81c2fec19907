"""On-disk layout of datasets and run directories.

    <data_dir>/dataset.json
    <data_dir>/annotations.json
    <data_dir>/pairs/<pair_id>/{interactive,non_interactive}.ppm
    <data_dir>/pairs/<pair_id>/{pose,gt_in,gt_non}.tnsr
    <data_dir>/splits/<kind>.json
"""

import re
from pathlib import Path
from typing import Union

INTERACTIVE_IMAGE = "interactive.ppm"
NON_INTERACTIVE_IMAGE = "non_interactive.ppm"
POSE_FILE = "pose.tnsr"
GT_IN_FILE = "gt_in.tnsr"
GT_NON_FILE = "gt_non.tnsr"

RESOLVED_CONFIG = "resolved_config.json"


def sanitize_filename(filename: str) -> str:
    """
    Convert a string into a safe filename by removing or replacing invalid characters.

    Args:
        filename: The string to convert into a safe filename

    Returns:
        A sanitized version of the filename that is safe to use in the filesystem
    """
    filename = re.sub(r'[<>:"/\\|?*]', "", filename)
    filename = re.sub(r"[\s\-]+", "_", filename)
    filename = re.sub(r"[^\x00-\x7F]+", "", filename)
    filename = filename.strip(". ")
    if not filename:
        filename = "unnamed"
    return filename


def pair_id_for(index: int) -> str:
    return f"pair_{index:05d}"


def get_dataset_info_path(data_dir: Union[str, Path]) -> Path:
    return Path(data_dir) / "dataset.json"


def get_annotations_path(data_dir: Union[str, Path]) -> Path:
    return Path(data_dir) / "annotations.json"


def get_pairs_dir(data_dir: Union[str, Path]) -> Path:
    return Path(data_dir) / "pairs"


def get_pair_dir(data_dir: Union[str, Path], pair_id: str) -> Path:
    """
    Get the directory holding one sample pair.

    Args:
        data_dir: Dataset root
        pair_id: Identifier such as ``pair_00003``

    Returns:
        Path to the pair directory
    """
    return get_pairs_dir(data_dir) / pair_id


def ensure_pair_dir(data_dir: Union[str, Path], pair_id: str) -> Path:
    pair_dir = get_pair_dir(data_dir, pair_id)
    pair_dir.mkdir(parents=True, exist_ok=True)
    return pair_dir


def get_manifest_path(data_dir: Union[str, Path], kind: str) -> Path:
    return Path(data_dir) / "splits" / f"{kind}.json"


def get_run_dir(runs_dir: Union[str, Path], name: str) -> Path:
    return Path(runs_dir) / sanitize_filename(name)


def ensure_run_dir(runs_dir: Union[str, Path], name: str) -> Path:
    """
    Ensure a run directory exists and return its path.

    Args:
        runs_dir: Parent directory of all runs
        name: Run name, sanitized before use

    Returns:
        Path to the created/existing run directory
    """
    run_dir = get_run_dir(runs_dir, name)
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir
