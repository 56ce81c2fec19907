"""IO utilities for the project."""

from .atomic import atomic_write, write_bytes, write_text
from .checkpoints import Checkpoint, load_checkpoint, save_checkpoint
from .images import decode_ppm, encode_ppm, read_image, write_image
from .json import load_json, save_json
from .paths import (
    GT_IN_FILE,
    GT_NON_FILE,
    INTERACTIVE_IMAGE,
    NON_INTERACTIVE_IMAGE,
    POSE_FILE,
    RESOLVED_CONFIG,
    ensure_pair_dir,
    ensure_run_dir,
    get_annotations_path,
    get_dataset_info_path,
    get_manifest_path,
    get_pair_dir,
    get_pairs_dir,
    get_run_dir,
    pair_id_for,
    sanitize_filename,
)
from .svg import bar_chart, line_chart, save_svg
from .tensors import decode_tensor, encode_tensor, read_tensor, write_tensor

__all__ = [
    "atomic_write",
    "write_bytes",
    "write_text",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "encode_ppm",
    "decode_ppm",
    "read_image",
    "write_image",
    "load_json",
    "save_json",
    "GT_IN_FILE",
    "GT_NON_FILE",
    "INTERACTIVE_IMAGE",
    "NON_INTERACTIVE_IMAGE",
    "POSE_FILE",
    "RESOLVED_CONFIG",
    "sanitize_filename",
    "pair_id_for",
    "get_dataset_info_path",
    "get_annotations_path",
    "get_pairs_dir",
    "get_pair_dir",
    "ensure_pair_dir",
    "get_manifest_path",
    "get_run_dir",
    "ensure_run_dir",
    "line_chart",
    "bar_chart",
    "save_svg",
    "encode_tensor",
    "decode_tensor",
    "read_tensor",
    "write_tensor",
]
