"""JSON utilities for reading and writing data."""

import json
from pathlib import Path
from typing import Any, Union

import numpy as np

from src.utils.errors import DataError, ParseError
from src.utils.io.atomic import atomic_write


def _default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return value.as_posix()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def load_json(path: Union[str, Path]) -> Any:
    """Load data from a JSON file.

    Args:
        path: Path to JSON file

    Returns:
        Loaded JSON data

    Raises:
        DataError: If the file doesn't exist
        ParseError: If JSON is invalid, with the byte offset of the problem
    """
    try:
        raw = Path(path).read_bytes()
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError("invalid UTF-8", path, e.start) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[: e.pos].encode("utf-8"))
        raise ParseError(e.msg, path, offset) from None


def save_json(path: Union[str, Path], data: Any) -> None:
    """Save data to a JSON file atomically.

    Args:
        path: Path to save JSON file
        data: Data to save; numpy scalars/arrays and paths are converted

    Raises:
        TypeError: If data is not JSON serializable
    """
    with atomic_write(path) as f:
        json.dump(data, f, ensure_ascii=False, indent=2, default=_default)
        f.write("\n")
