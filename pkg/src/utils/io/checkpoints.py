"""Checkpoint directories: one TNSR file per tensor plus a JSON manifest.

    <dir>/manifest.json
    <dir>/params/<name>.tnsr
    <dir>/optim/m/<name>.tnsr      (optional AdamW moments)
    <dir>/optim/v/<name>.tnsr
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from src.utils.errors import CheckpointError, DataError
from src.utils.io.json import load_json, save_json
from src.utils.io.tensors import read_tensor, write_tensor

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST_FILE = "manifest.json"


@dataclass
class Checkpoint:
    params: Dict[str, np.ndarray]
    metadata: Dict[str, Any] = field(default_factory=dict)
    optimizer: Optional[Dict[str, Any]] = None

    @property
    def step(self) -> int:
        return int(self.metadata.get("step", 0))


def _write_group(directory: Path, group: str, tensors: Dict[str, np.ndarray]) -> Dict[str, str]:
    files = {}
    for name, array in tensors.items():
        relative = f"{group}/{name}.tnsr"
        write_tensor(directory / relative, array)
        files[name] = relative
    return files


def save_checkpoint(
    directory: Union[str, Path],
    params: Dict[str, np.ndarray],
    metadata: Optional[Dict[str, Any]] = None,
    optimizer: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write tensors (as float32) and a manifest describing them.

    Args:
        directory: Checkpoint directory, created if needed
        params: Parameter arrays keyed by dotted name
        metadata: Configuration, seeds and step recorded in the manifest
        optimizer: ``{"step": int, "m": {...}, "v": {...}}`` from AdamW

    Returns:
        Path to the manifest
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest: Dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        **(metadata or {}),
        "tensors": _write_group(directory, "params", params),
    }
    if optimizer is not None:
        manifest["optimizer"] = {
            "step": int(optimizer["step"]),
            "m": _write_group(directory, "optim/m", optimizer["m"]),
            "v": _write_group(directory, "optim/v", optimizer["v"]),
        }
    path = directory / MANIFEST_FILE
    save_json(path, manifest)
    logger.info(f"✓ Saved checkpoint with {len(params)} tensors to {directory}")
    return path


def _read_group(directory: Path, files: Dict[str, str]) -> Dict[str, np.ndarray]:
    try:
        return {name: read_tensor(directory / relative) for name, relative in files.items()}
    except DataError as e:
        raise CheckpointError(f"unreadable checkpoint tensor: {e}") from None


def load_checkpoint(directory: Union[str, Path]) -> Checkpoint:
    """Read a checkpoint directory written by ``save_checkpoint``.

    Raises:
        CheckpointError: If the manifest is missing, of another format
            version, or references unreadable tensors.
    """
    directory = Path(directory)
    try:
        manifest = load_json(directory / MANIFEST_FILE)
    except DataError as e:
        raise CheckpointError(f"cannot read checkpoint manifest: {e}") from None
    version = manifest.get("format_version") if isinstance(manifest, dict) else None
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"{directory}: checkpoint format_version {version!r}, expected {FORMAT_VERSION}"
        )
    params = _read_group(directory, manifest.get("tensors", {}))
    optimizer = None
    if "optimizer" in manifest:
        state = manifest["optimizer"]
        optimizer = {
            "step": int(state["step"]),
            "m": _read_group(directory, state["m"]),
            "v": _read_group(directory, state["v"]),
        }
    metadata = {k: v for k, v in manifest.items() if k not in ("tensors", "optimizer")}
    return Checkpoint(params=params, metadata=metadata, optimizer=optimizer)
