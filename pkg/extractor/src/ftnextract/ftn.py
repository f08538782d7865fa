"""Writer for the FTN tensor interchange format.

Layout (little-endian): magic "FTN1", dtype byte 0x01 (float32), ndim byte
(always 3), two reserved zero bytes, three uint32 dims H/W/C, then H*W*C
float32 values row-major with the channel axis fastest.  This mirrors the
format the matching engine consumes; files are written atomically via a
temp-file rename so a crashed run never leaves a half tensor behind.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"FTN1"
_HEADER = struct.Struct("<4sBBH3I")


def write_ftn(path: str | Path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise ValueError(f"tensor must be (H, W, C) with positive dims, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("refusing to write non-finite values")
    h, w, c = arr.shape
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, 0x01, 3, 0, h, w, c))
            fh.write(arr.astype("<f4").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
