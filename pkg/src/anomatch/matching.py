"""Patch-constrained template matching and hierarchical map aggregation.

The two directions answer different questions at every pixel:

* forward: is the query vector similar to *any* template vector inside the
  spatial patch window around the pixel (valid content, tolerant to small
  misalignment)?
* backward: does any vector from the query's own patch match the templates
  stored at exactly this position (content that is valid somewhere may still
  sit at an invalid location)?

Both reduce to a max of cosine similarities over a bounded candidate set.
The kernels below are exact: no approximate index, no pruning.  Per pixel,
candidates are scanned sheet-major then row-major, the dot product runs
sequentially over channels in float64, and norms-squared are precomputed the
same way, so outputs are bit-identical for any thread count and any
surrounding parallel schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from numba import njit, prange

from .errors import ConfigError, DataError
from .tensors import FeatureMap


@dataclass(frozen=True)
class PatchSpec:
    """Patch window: m is the width (x extent), n the height (y extent)."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.m % 2 == 0 or self.n % 2 == 0:
            raise ConfigError(f"patch dims must be odd positive, got {self.m}x{self.n}")

    @property
    def rx(self) -> int:
        return self.m // 2

    @property
    def ry(self) -> int:
        return self.n // 2


@dataclass(frozen=True)
class MatchConfig:
    """Layer selection, per-layer patch sizes, mixing ratio and output size."""

    layer_ids: tuple[int, ...]
    patches: dict[int, PatchSpec] = field(default_factory=dict)
    alpha: float = 0.8
    output_resolution: tuple[int, int] | None = None  # None: query image size

    def __post_init__(self):
        if not self.layer_ids:
            raise ConfigError("at least one layer required")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        missing = [lid for lid in self.layer_ids if lid not in self.patches]
        if missing:
            raise ConfigError(f"no patch size for layers {missing}")
        if self.output_resolution is not None:
            h, w = self.output_resolution
            if h < 1 or w < 1:
                raise ConfigError(f"output resolution must be positive, got {h}x{w}")

    def validate_against(self, bank_layer_ids: Sequence[int]) -> None:
        missing = [lid for lid in self.layer_ids if lid not in bank_layer_ids]
        if missing:
            raise ConfigError(f"layers {missing} not present in bank {sorted(bank_layer_ids)}")


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), in [0, 2].  A zero-norm operand yields 1.0 (similarity
    zero: maximal ignorance rather than NaN)."""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if u.shape != v.shape:
        raise DataError(f"vector length mismatch: {u.shape[0]} vs {v.shape[0]}")
    nsu = float(np.dot(u, u))
    nsv = float(np.dot(v, v))
    if nsu == 0.0 or nsv == 0.0:
        return 1.0
    d = 1.0 - float(np.dot(u, v)) / np.sqrt(nsu * nsv)
    return min(2.0, max(0.0, d))


def patch_indices(
    x: int, y: int, p: PatchSpec, H: int, W: int
) -> set[tuple[int, int]]:
    """All in-bounds (x', y') with |x'-x| <= m//2 and |y'-y| <= n//2.

    Out-of-bounds offsets near borders are dropped, never padded or wrapped:
    padding would fabricate template vectors that no image produced.
    """
    if not (0 <= x < W and 0 <= y < H):
        raise DataError(f"centre ({x}, {y}) outside {W}x{H}")
    return {
        (xx, yy)
        for yy in range(max(0, y - p.ry), min(H - 1, y + p.ry) + 1)
        for xx in range(max(0, x - p.rx), min(W - 1, x + p.rx) + 1)
    }


@njit(cache=True, parallel=True)
def _norms_sq(a):  # (..., C) -> (...) sequential per-vector sum of squares
    flat = a.reshape(-1, a.shape[-1])
    out = np.empty(flat.shape[0], dtype=np.float64)
    for i in prange(flat.shape[0]):
        s = 0.0
        for c in range(flat.shape[1]):
            s += flat[i, c] * flat[i, c]
        out[i] = s
    return out.reshape(a.shape[:-1])


@njit(cache=True, parallel=True)
def _forward_kernel(q, t, qs, ts, ry, rx):
    H, W, C = q.shape
    N = t.shape[0]
    out = np.empty((H, W), dtype=np.float32)
    for y in prange(H):
        for x in range(W):
            y0 = y - ry if y - ry > 0 else 0
            y1 = y + ry if y + ry < H - 1 else H - 1
            x0 = x - rx if x - rx > 0 else 0
            x1 = x + rx if x + rx < W - 1 else W - 1
            qn = qs[y, x]
            best = -2.0
            for n in range(N):
                for yy in range(y0, y1 + 1):
                    for xx in range(x0, x1 + 1):
                        tn = ts[n, yy, xx]
                        if qn == 0.0 or tn == 0.0:
                            sim = 0.0
                        else:
                            d = 0.0
                            for c in range(C):
                                d += q[y, x, c] * t[n, yy, xx, c]
                            sim = d / np.sqrt(qn * tn)
                        if sim > best:
                            best = sim
            v = 1.0 - best
            if v < 0.0:
                v = 0.0
            elif v > 2.0:
                v = 2.0
            out[y, x] = v
    return out


@njit(cache=True, parallel=True)
def _backward_kernel(q, t, qs, ts, ry, rx):
    H, W, C = q.shape
    N = t.shape[0]
    out = np.empty((H, W), dtype=np.float32)
    for y in prange(H):
        for x in range(W):
            y0 = y - ry if y - ry > 0 else 0
            y1 = y + ry if y + ry < H - 1 else H - 1
            x0 = x - rx if x - rx > 0 else 0
            x1 = x + rx if x + rx < W - 1 else W - 1
            best = -2.0
            for n in range(N):
                tn = ts[n, y, x]
                for yy in range(y0, y1 + 1):
                    for xx in range(x0, x1 + 1):
                        qn = qs[yy, xx]
                        if qn == 0.0 or tn == 0.0:
                            sim = 0.0
                        else:
                            d = 0.0
                            for c in range(C):
                                d += t[n, y, x, c] * q[yy, xx, c]
                            sim = d / np.sqrt(tn * qn)
                        if sim > best:
                            best = sim
            v = 1.0 - best
            if v < 0.0:
                v = 0.0
            elif v > 2.0:
                v = 2.0
            out[y, x] = v
    return out


def _as_query(query) -> np.ndarray:
    arr = query.data if isinstance(query, FeatureMap) else np.asarray(query)
    if arr.ndim != 3:
        raise DataError(f"query must be (H, W, C), got shape {arr.shape}")
    return np.ascontiguousarray(arr, dtype=np.float64)


def _as_sheets(sheets) -> np.ndarray:
    if isinstance(sheets, np.ndarray) and sheets.ndim == 4:
        stack = sheets
    else:
        items = [s.data if isinstance(s, FeatureMap) else np.asarray(s) for s in sheets]
        if not items:
            raise DataError("empty sheet stack")
        stack = np.stack(items)
    if stack.ndim != 4 or stack.shape[0] < 1:
        raise DataError(f"sheets must be (N, H, W, C), got shape {stack.shape}")
    return np.ascontiguousarray(stack, dtype=np.float64)


def _check_shapes(q: np.ndarray, t: np.ndarray) -> None:
    if q.shape != t.shape[1:]:
        raise DataError(f"query shape {q.shape} != sheet shape {tuple(t.shape[1:])}")


def forward_map(query, sheets, patch: PatchSpec) -> np.ndarray:
    """Per pixel: min cosine distance from the query vector to every template
    vector of every sheet within the patch window.  Returns (H, W) float32."""
    q = _as_query(query)
    t = _as_sheets(sheets)
    _check_shapes(q, t)
    return _forward_kernel(q, t, _norms_sq(q), _norms_sq(t), patch.ry, patch.rx)


def backward_map(query, sheets, patch: PatchSpec) -> np.ndarray:
    """Per pixel: min over the query's own patch vectors of the distance to
    the best-matching template vector stored at exactly this position."""
    q = _as_query(query)
    t = _as_sheets(sheets)
    _check_shapes(q, t)
    return _backward_kernel(q, t, _norms_sq(q), _norms_sq(t), patch.ry, patch.rx)


def mutual_map(query, sheets, patch: PatchSpec, alpha: float = 0.8) -> np.ndarray:
    """alpha * forward + (1 - alpha) * backward, pointwise."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}")
    fwd = forward_map(query, sheets, patch)
    bwd = backward_map(query, sheets, patch)
    return blend_maps(fwd, bwd, alpha)


def blend_maps(fwd: np.ndarray, bwd: np.ndarray, alpha: float) -> np.ndarray:
    return (alpha * fwd.astype(np.float64) + (1.0 - alpha) * bwd.astype(np.float64)).astype(
        np.float32
    )


def count_zero_vectors(arr) -> int:
    """Diagnostic: number of exactly-zero feature vectors in a map or stack."""
    a = np.asarray(arr.data if isinstance(arr, FeatureMap) else arr, dtype=np.float64)
    ns = np.einsum("...c,...c->...", a, a)
    return int(np.count_nonzero(ns == 0.0))


def bilinear_resize(values: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear rescale with half-pixel centres (corner-aligned = false) and
    edge clamping.  Output values never leave [min, max] of the input."""
    img = np.asarray(values, dtype=np.float64)
    if img.ndim != 2:
        raise DataError(f"expected 2-D map, got shape {img.shape}")
    if out_h < 1 or out_w < 1:
        raise ConfigError(f"target resolution must be positive, got {out_h}x{out_w}")
    in_h, in_w = img.shape
    if (in_h, in_w) == (out_h, out_w):
        return img.copy()
    ys = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0.0, in_h - 1.0)
    xs = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0.0, in_w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = img[np.ix_(y0, x0)] * (1.0 - wx) + img[np.ix_(y0, x1)] * wx
    bot = img[np.ix_(y1, x0)] * (1.0 - wx) + img[np.ix_(y1, x1)] * wx
    return top * (1.0 - wy) + bot * wy


def aggregate_layers(
    maps: Sequence[np.ndarray], resolution: tuple[int, int]
) -> np.ndarray:
    """Rescale every per-layer map to the target resolution and sum them.

    Layer maps are summed raw, with equal weight; normalisation for display
    happens only in postprocessing.
    """
    if len(maps) == 0:
        raise DataError("no maps to aggregate")
    out_h, out_w = resolution
    total = np.zeros((out_h, out_w), dtype=np.float64)
    for m in maps:
        total += bilinear_resize(np.asarray(m), out_h, out_w)
    return total.astype(np.float32)


def set_parallel_workers(n: int) -> int:
    """Set the worker count for the matching kernels, clamped to what the
    runtime can host.  Returns the effective count."""
    if n < 1:
        raise ConfigError(f"worker count must be >= 1, got {n}")
    eff = min(n, numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(eff)
    return eff


def get_parallel_workers() -> int:
    return numba.get_num_threads()
