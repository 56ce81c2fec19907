"""Write-temp-then-rename file output."""

import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any, Iterator, Union

logger = logging.getLogger(__name__)


@contextmanager
def atomic_write(path: Union[str, Path], binary: bool = False) -> Iterator[IO[Any]]:
    """Open a temporary sibling of ``path`` and move it into place on success.

    Readers never observe a partially written file; on error the temporary
    file is removed and ``path`` is left untouched.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        if binary:
            with os.fdopen(fd, "wb") as f:
                yield f
        else:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
                yield f
        os.replace(tmp_name, target)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


def write_bytes(path: Union[str, Path], payload: bytes) -> None:
    with atomic_write(path, binary=True) as f:
        f.write(payload)


def write_text(path: Union[str, Path], text: str) -> None:
    with atomic_write(path) as f:
        f.write(text)
