"""Binary feature-tensor file format ("FTN") and the per-layer feature map type.

On-disk layout, fixed little-endian:

    bytes 0-3   magic  ``46 54 4E 31`` ("FTN1"; the trailing digit is the
                format version)
    byte  4     dtype code, 0x01 = float32
    byte  5     ndim, always 3
    bytes 6-7   reserved, zero
    next  12    three uint32 dims: H, W, C
    payload     H*W*C float32 values, row-major with the channel axis fastest

The format is deliberately minimal so any implementation can produce
bit-exact interchange files.  Non-finite values are rejected at write time
rather than sanitised; they would silently poison cosine distances later.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    DataError,
    PayloadMismatchError,
    TruncatedError,
    VersionError,
)

MAGIC = b"FTN1"
DTYPE_F32 = 0x01
_HEADER = struct.Struct("<4sBBH3I")  # magic, dtype, ndim, reserved, H, W, C


@dataclass(frozen=True)
class FeatureMap:
    """One layer's C-channel feature grid for a single image.

    ``data`` is an (H, W, C) float32 array, made read-only on construction so
    maps can be shared freely across threads.
    """

    layer_id: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise DataError(f"feature map must be (H, W, C), got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise DataError(f"feature map dims must be >= 1, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


def _check_finite(arr: np.ndarray) -> None:
    if not np.isfinite(arr).all():
        flat = int(np.flatnonzero(~np.isfinite(arr.reshape(-1)))[0])
        raise DataError(f"non-finite value at flat index {flat}")


def write_tensor(path: str | Path, t: FeatureMap | np.ndarray) -> None:
    """Write a feature map to ``path`` in the FTN format.

    Rejects non-finite values, naming the first offending flat index.
    """
    arr = t.data if isinstance(t, FeatureMap) else np.ascontiguousarray(t, dtype=np.float32)
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise DataError(f"tensor must be (H, W, C) with positive dims, got {arr.shape}")
    _check_finite(arr)
    h, w, c = arr.shape
    header = _HEADER.pack(MAGIC, DTYPE_F32, 3, 0, h, w, c)
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_tensor(path: str | Path, layer_id: int = 0) -> FeatureMap:
    """Read an FTN file back into a FeatureMap.

    Raises a distinct error per failure mode: bad magic, unsupported version,
    truncated payload, or header/payload length mismatch.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        if raw[:3] != MAGIC[:3]:
            raise BadMagicError(f"{path}: not an FTN file (short header)")
        raise TruncatedError(f"{path}: header truncated at {len(raw)} bytes")
    magic, dtype, ndim, reserved, h, w, c = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        if magic[:3] == MAGIC[:3]:
            raise VersionError(f"{path}: unsupported format version {magic[3:]!r}")
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if dtype != DTYPE_F32:
        raise VersionError(f"{path}: unsupported dtype code {dtype:#x}")
    if ndim != 3 or reserved != 0:
        raise PayloadMismatchError(f"{path}: malformed header (ndim={ndim}, reserved={reserved})")
    if min(h, w, c) < 1:
        raise PayloadMismatchError(f"{path}: non-positive dims ({h}, {w}, {c})")
    expected = h * w * c * 4
    payload = raw[_HEADER.size:]
    if len(payload) < expected:
        raise TruncatedError(
            f"{path}: payload holds {len(payload) // 4} of {h * w * c} values"
        )
    if len(payload) > expected:
        raise PayloadMismatchError(
            f"{path}: {len(payload) - expected} trailing bytes beyond declared dims"
        )
    arr = np.frombuffer(payload, dtype="<f4").reshape(h, w, c)
    _check_finite(arr)
    return FeatureMap(layer_id=layer_id, data=arr)


def write_map(path: str | Path, values: np.ndarray) -> None:
    """Write a 2-D anomaly map as a single-channel FTN tensor."""
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise DataError(f"anomaly map must be 2-D, got shape {arr.shape}")
    write_tensor(path, arr[:, :, None])


def read_map(path: str | Path) -> np.ndarray:
    """Read a single-channel FTN tensor back as a 2-D float32 array."""
    fm = read_tensor(path)
    if fm.channels != 1:
        raise DataError(f"{path}: expected C=1 anomaly map, got C={fm.channels}")
    return fm.data[:, :, 0]
