"""Template banks: per-layer stacks of nominal feature sheets plus a manifest.

A bank directory holds one FTN file per (layer, sheet) and a ``bank.json``
manifest.  Sheets are append-only, which is what makes hot update cheap: new
nominal samples are written as extra files and the manifest is rewritten,
while every existing tensor file stays byte-identical.  Directory writes are
guarded by an exclusive ``bank.lock`` file; readers need no lock.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from filelock import FileLock, Timeout

from .errors import BankLockError, DataError
from .tensors import FeatureMap, read_tensor, write_tensor

MANIFEST_NAME = "bank.json"
LOCK_NAME = "bank.lock"
MANIFEST_VERSION = 1


@dataclass
class TemplateBank:
    """In-memory bank: for each layer an (N, H, W, C) float32 stack.

    At each pixel (x, y) of a layer, the implicit template set is the N
    C-vectors ``layers[layer_id][:, y, x, :]``.  ``sources[i]`` names the
    image that produced sheet i of every layer.
    """

    layers: dict[int, np.ndarray]
    sources: list[str]
    compressed: bool = False
    pts: dict | None = None
    appended: bool = False
    created: str = ""

    def __post_init__(self):
        if not self.layers:
            raise DataError("bank has no layers")
        counts = {arr.shape[0] for arr in self.layers.values()}
        if len(counts) != 1:
            raise DataError(f"layers disagree on sheet count: {sorted(counts)}")
        n = counts.pop()
        if n < 1:
            raise DataError("bank must hold at least one sheet")
        if len(self.sources) != n:
            raise DataError(
                f"provenance length {len(self.sources)} != sheet count {n}"
            )
        for lid, arr in self.layers.items():
            if arr.ndim != 4:
                raise DataError(f"layer {lid}: expected (N, H, W, C) stack")
            arr.flags.writeable = False

    @property
    def sheet_count(self) -> int:
        return next(iter(self.layers.values())).shape[0]

    @property
    def layer_ids(self) -> list[int]:
        return sorted(self.layers)

    def layer_shape(self, layer_id: int) -> tuple[int, int, int]:
        arr = self.layers[layer_id]
        return arr.shape[1], arr.shape[2], arr.shape[3]

    def manifest(self) -> dict:
        return {
            "version": MANIFEST_VERSION,
            "layers": [
                {"layer_id": lid, "H": s[0], "W": s[1], "C": s[2]}
                for lid, s in ((lid, self.layer_shape(lid)) for lid in self.layer_ids)
            ],
            "sheets": self.sheet_count,
            "compressed": self.compressed,
            "pts": self.pts,
            "appended": self.appended,
            "sources": list(self.sources),
            "created": self.created,
        }


def build_bank(
    images: Sequence[Mapping[int, FeatureMap] | Sequence[FeatureMap]],
    sources: Sequence[str] | None = None,
) -> TemplateBank:
    """Stack per-image layer feature maps into a bank, preserving input order.

    Every image must contribute the same layer ids with matching shapes.
    """
    if not images:
        raise DataError("cannot build a bank from zero images")
    per_image: list[dict[int, FeatureMap]] = []
    for entry in images:
        if isinstance(entry, Mapping):
            per_image.append({int(k): v for k, v in entry.items()})
        else:
            per_image.append({fm.layer_id: fm for fm in entry})
    layer_ids = sorted(per_image[0])
    for i, maps in enumerate(per_image):
        if sorted(maps) != layer_ids:
            raise DataError(
                f"image {i} layers {sorted(maps)} != expected {layer_ids}"
            )
    layers: dict[int, np.ndarray] = {}
    for lid in layer_ids:
        shape0 = per_image[0][lid].shape
        for i, maps in enumerate(per_image):
            if maps[lid].shape != shape0:
                raise DataError(
                    f"layer {lid}: image {i} shape {maps[lid].shape} != {shape0}"
                )
        layers[lid] = np.stack([maps[lid].data for maps in per_image])
    if sources is None:
        sources = [f"image_{i:04d}" for i in range(len(per_image))]
    return TemplateBank(
        layers=layers,
        sources=list(sources),
        compressed=False,
        pts=None,
        created=_now(),
    )


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _sheet_file(layer_id: int, sheet: int) -> str:
    return f"layer{layer_id}_sheet{sheet:04d}.ftn"


def save_bank(bank: TemplateBank, out_dir: str | Path) -> Path:
    """Write a bank directory: one FTN per (layer, sheet) plus bank.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lock = _writer_lock(out)
    try:
        for lid in bank.layer_ids:
            stack = bank.layers[lid]
            for s in range(stack.shape[0]):
                write_tensor(out / _sheet_file(lid, s), stack[s])
        _write_manifest(out, bank.manifest())
    finally:
        lock.release()
    return out


def _write_manifest(out: Path, manifest: dict) -> None:
    (out / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _writer_lock(bank_dir: Path, timeout: float = 10.0) -> FileLock:
    lock = FileLock(str(bank_dir / LOCK_NAME))
    try:
        lock.acquire(timeout=timeout)
    except Timeout as exc:
        raise BankLockError(f"{bank_dir}: another writer holds the bank lock") from exc
    return lock


def load_bank(bank_dir: str | Path) -> TemplateBank:
    """Load a bank directory, verifying manifest shapes against the tensors."""
    bank_dir = Path(bank_dir)
    mpath = bank_dir / MANIFEST_NAME
    if not mpath.is_file():
        raise DataError(f"{bank_dir}: missing {MANIFEST_NAME}")
    manifest = json.loads(mpath.read_text(encoding="utf-8"))
    if manifest.get("version") != MANIFEST_VERSION:
        raise DataError(f"{bank_dir}: unsupported manifest version {manifest.get('version')}")
    n = int(manifest["sheets"])
    layers: dict[int, np.ndarray] = {}
    for entry in manifest["layers"]:
        lid = int(entry["layer_id"])
        want = (int(entry["H"]), int(entry["W"]), int(entry["C"]))
        sheets = []
        for s in range(n):
            path = bank_dir / _sheet_file(lid, s)
            if not path.is_file():
                raise DataError(f"{bank_dir}: missing sheet file {path.name}")
            fm = read_tensor(path, layer_id=lid)
            if fm.shape != want:
                raise DataError(
                    f"{path.name}: shape {fm.shape} != manifest {want}"
                )
            sheets.append(fm.data)
        layers[lid] = np.stack(sheets)
    return TemplateBank(
        layers=layers,
        sources=list(manifest["sources"]),
        compressed=bool(manifest["compressed"]),
        pts=manifest.get("pts"),
        appended=bool(manifest.get("appended", False)),
        created=str(manifest.get("created", "")),
    )


def append_sheets(
    bank_dir: str | Path,
    images: Sequence[Mapping[int, FeatureMap] | Sequence[FeatureMap]],
    sources: Sequence[str] | None = None,
    lock_timeout: float = 10.0,
) -> TemplateBank:
    """Hot update: append new nominal sheets to an existing bank on disk.

    Existing sheet files are never rewritten.  Appending to a compressed bank
    is allowed and marks the manifest ``compressed`` + ``appended``; it does
    not re-run prototype selection.
    """
    bank_dir = Path(bank_dir)
    bank = load_bank(bank_dir)
    extra = build_bank(images, sources=sources)
    if sorted(extra.layer_ids) != bank.layer_ids:
        raise DataError(
            f"update layers {extra.layer_ids} != bank layers {bank.layer_ids}"
        )
    for lid in bank.layer_ids:
        if extra.layer_shape(lid) != bank.layer_shape(lid):
            raise DataError(
                f"layer {lid}: update shape {extra.layer_shape(lid)} "
                f"!= bank shape {bank.layer_shape(lid)}"
            )
    n0 = bank.sheet_count
    lock = _writer_lock(bank_dir, timeout=lock_timeout)
    try:
        for lid in bank.layer_ids:
            stack = extra.layers[lid]
            for s in range(stack.shape[0]):
                write_tensor(bank_dir / _sheet_file(lid, n0 + s), stack[s])
        merged = TemplateBank(
            layers={
                lid: np.concatenate([bank.layers[lid], extra.layers[lid]])
                for lid in bank.layer_ids
            },
            sources=bank.sources + extra.sources,
            compressed=bank.compressed,
            pts=bank.pts,
            appended=bank.appended or bank.compressed,
            created=_now(),
        )
        _write_manifest(bank_dir, merged.manifest())
    finally:
        lock.release()
    return merged
