"""TNSR files: an ASCII header line followed by row-major little-endian float32.

    TNSR v1 <ndim> <extent_0> ... <extent_{ndim-1}>\\n<payload>
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from src.utils.errors import DataError, ParseError
from src.utils.io.atomic import write_bytes

logger = logging.getLogger(__name__)

MAGIC = "TNSR"
VERSION = "v1"
PAYLOAD_DTYPE = np.dtype("<f4")
MAX_HEADER_BYTES = 4096


def encode_tensor(array: np.ndarray) -> bytes:
    data = np.ascontiguousarray(array, dtype=PAYLOAD_DTYPE)
    extents = " ".join(str(n) for n in data.shape)
    header = f"{MAGIC} {VERSION} {data.ndim}" + (f" {extents}" if extents else "") + "\n"
    return header.encode("ascii") + data.tobytes(order="C")


def _tokens(header: bytes) -> List[Tuple[int, str]]:
    """Whitespace-separated tokens with their byte offsets."""
    found = []
    start: Optional[int] = None
    for i, byte in enumerate(header + b" "):
        if chr(byte).isspace():
            if start is not None:
                found.append((start, header[start:i].decode("ascii", errors="replace")))
                start = None
        elif start is None:
            start = i
    return found


def decode_tensor(blob: bytes, path: Optional[Union[str, Path]] = None) -> np.ndarray:
    """Parse a TNSR blob into a float64 array.

    Raises:
        ParseError: malformed header or a payload of the wrong length.
    """
    newline = blob.find(b"\n", 0, MAX_HEADER_BYTES)
    if newline < 0:
        raise ParseError("missing header line", path, min(len(blob), MAX_HEADER_BYTES))
    tokens = _tokens(blob[:newline])
    if len(tokens) < 3 or tokens[0][1] != MAGIC:
        raise ParseError(f"expected '{MAGIC}' magic", path, tokens[0][0] if tokens else 0)
    if tokens[1][1] != VERSION:
        raise ParseError(f"unsupported version '{tokens[1][1]}'", path, tokens[1][0])
    offset, ndim_text = tokens[2]
    if not ndim_text.isdigit():
        raise ParseError(f"bad dimension count '{ndim_text}'", path, offset)
    ndim = int(ndim_text)
    if len(tokens) != 3 + ndim:
        raise ParseError(f"expected {ndim} extents, found {len(tokens) - 3}", path, offset)
    shape = []
    for offset, text in tokens[3:]:
        if not text.isdigit() or int(text) < 1:
            raise ParseError(f"bad extent '{text}'", path, offset)
        shape.append(int(text))

    payload = blob[newline + 1 :]
    expected = int(np.prod(shape, dtype=np.int64)) * PAYLOAD_DTYPE.itemsize
    if len(payload) != expected:
        raise ParseError(
            f"payload has {len(payload)} bytes, expected {expected}",
            path,
            newline + 1 + min(len(payload), expected),
        )
    return np.frombuffer(payload, dtype=PAYLOAD_DTYPE).reshape(shape).astype(np.float64)


def write_tensor(path: Union[str, Path], array: np.ndarray) -> None:
    write_bytes(path, encode_tensor(array))


def read_tensor(path: Union[str, Path]) -> np.ndarray:
    try:
        blob = Path(path).read_bytes()
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    return decode_tensor(blob, path)
