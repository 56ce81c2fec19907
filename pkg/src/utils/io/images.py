"""Binary PPM (P6) images, 8 bits per sample.

Images are handled as ``3×H×W`` float arrays with values in [0, 1].
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from src.utils.errors import DataError, ParseError, ShapeError
from src.utils.io.atomic import write_bytes

logger = logging.getLogger(__name__)

PPM_MAGIC = b"P6"
MAX_SAMPLE = 255
_WHITESPACE = b" \t\n\r\x0b\x0c"


def encode_ppm(image: np.ndarray) -> bytes:
    if image.ndim != 3 or image.shape[0] != 3:
        raise ShapeError(f"expected a 3×H×W image, got {image.shape}")
    _, h, w = image.shape
    pixels = np.clip(np.round(np.asarray(image) * MAX_SAMPLE), 0, MAX_SAMPLE).astype(np.uint8)
    header = f"P6\n{w} {h}\n{MAX_SAMPLE}\n".encode("ascii")
    return header + pixels.transpose(1, 2, 0).tobytes()


def _read_header(blob: bytes, path: Optional[Union[str, Path]]) -> Tuple[List[int], int]:
    """Return (width, height, maxval) and the offset of the raster."""
    values: List[int] = []
    pos = len(PPM_MAGIC)
    while len(values) < 3:
        while pos < len(blob) and (blob[pos] in _WHITESPACE or blob[pos] == ord("#")):
            if blob[pos] == ord("#"):
                end = blob.find(b"\n", pos)
                pos = len(blob) if end < 0 else end
            pos += 1
        start = pos
        while pos < len(blob) and chr(blob[pos]).isdigit():
            pos += 1
        if start == pos:
            raise ParseError("expected a decimal header field", path, start)
        values.append(int(blob[start:pos]))
    if pos >= len(blob) or blob[pos] not in _WHITESPACE:
        raise ParseError("expected whitespace before raster", path, pos)
    return values, pos + 1


def decode_ppm(blob: bytes, path: Optional[Union[str, Path]] = None) -> np.ndarray:
    """Parse a P6 blob.

    Raises:
        ParseError: wrong magic, malformed header, unsupported depth or short raster.
    """
    if not blob.startswith(PPM_MAGIC):
        raise ParseError("not a binary PPM (expected 'P6')", path, 0)
    (width, height, maxval), raster_at = _read_header(blob, path)
    if width < 1 or height < 1:
        raise ParseError(f"bad image size {width}×{height}", path, len(PPM_MAGIC))
    if not 1 <= maxval <= MAX_SAMPLE:
        raise ParseError(f"unsupported maxval {maxval}", path, raster_at - 1)
    expected = width * height * 3
    raster = blob[raster_at : raster_at + expected]
    if len(raster) < expected:
        raise ParseError(
            f"raster has {len(raster)} bytes, expected {expected}", path, raster_at + len(raster)
        )
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)
    return pixels.transpose(2, 0, 1).astype(np.float64) / maxval


def write_image(path: Union[str, Path], image: np.ndarray) -> None:
    write_bytes(path, encode_ppm(image))


def read_image(path: Union[str, Path]) -> np.ndarray:
    try:
        blob = Path(path).read_bytes()
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    return decode_ppm(blob, path)
