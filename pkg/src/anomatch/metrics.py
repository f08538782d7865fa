"""Detection and localization quality metrics: AUROC, PRO, and curve sweeps.

AUROC is the exact Mann-Whitney rank statistic, no binning.  PRO sweeps
thresholds over quantiles of the pooled score distribution: at each
threshold, the per-region overlap is the mean recall over all 8-connected
ground-truth components, and the false-positive rate pools every normal
pixel dataset-wide.  The PRO integral runs over FPR in [0, cap] and is
normalised to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.stats import rankdata

from .errors import ConfigError, DataError

_EIGHT = np.ones((3, 3), dtype=int)


@dataclass
class EvalRecord:
    """Paired predictions and ground truth for one evaluation run."""

    image_scores: list[tuple[float, bool]] = field(default_factory=list)
    pixel: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)  # (map, mask)


@dataclass
class ProCurve:
    """Threshold-swept (fpr, pro) points plus the capped, normalised integral."""

    points: list[tuple[float, float]]
    cap: float
    integral: float
    degenerate: bool = False


def auroc(scores, labels) -> float:
    """P(score_pos > score_neg) + 0.5 P(equal), via average ranks."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape or s.ndim != 1:
        raise DataError(f"scores/labels shape mismatch: {s.shape} vs {y.shape}")
    n_pos = int(y.sum())
    n_neg = int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUROC needs both classes present")
    ranks = rankdata(s)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _as_mask(mask) -> np.ndarray:
    m = np.asarray(mask)
    if m.ndim != 2:
        raise DataError(f"mask must be 2-D, got shape {m.shape}")
    vals = np.unique(m)
    if not np.isin(vals, (0, 1)).all():
        raise DataError(f"mask must be binary, found values {vals[:5]}")
    return m.astype(bool)


def connected_components(mask) -> list[np.ndarray]:
    """8-connected components as (n_i, 2) arrays of (y, x), labelled in
    raster order of each component's first pixel."""
    m = _as_mask(mask)
    labels, count = ndimage.label(m, structure=_EIGHT)
    return [np.argwhere(labels == i) for i in range(1, count + 1)]


def _pooled_thresholds(pooled: np.ndarray, steps: int | None) -> np.ndarray:
    """Descending threshold grid: score quantiles, or every unique score."""
    if steps is None:
        return np.unique(pooled)[::-1]
    if steps < 2:
        raise ConfigError(f"steps must be >= 2, got {steps}")
    qs = np.quantile(pooled, np.linspace(0.0, 1.0, steps))
    return np.unique(qs)[::-1]


class _SweepContext:
    """Sorted score pools that turn each threshold into O(log n) counts."""

    def __init__(self, maps, masks):
        if len(maps) != len(masks) or len(maps) == 0:
            raise DataError("need equally many maps and masks, at least one")
        self.maps = [np.asarray(m, dtype=np.float64) for m in maps]
        self.masks = [_as_mask(g) for g in masks]
        for m, g in zip(self.maps, self.masks):
            if m.shape != g.shape:
                raise DataError(f"map shape {m.shape} != mask shape {g.shape}")
        self.pooled = np.concatenate([m.reshape(-1) for m in self.maps])
        neg_scores = [m[~g] for m, g in zip(self.maps, self.masks)]
        pos_scores = [m[g] for m, g in zip(self.maps, self.masks)]
        self.neg_sorted = np.sort(np.concatenate(neg_scores))
        self.pos_sorted = np.sort(np.concatenate(pos_scores))
        self.comp_sorted: list[np.ndarray] = []
        for m, g in zip(self.maps, self.masks):
            for comp in connected_components(g):
                self.comp_sorted.append(np.sort(m[comp[:, 0], comp[:, 1]]))
        self.per_image = list(zip(self.maps, self.masks))

    @staticmethod
    def _count_ge(sorted_vals: np.ndarray, t: float) -> int:
        return int(sorted_vals.size - np.searchsorted(sorted_vals, t, side="left"))

    def fpr(self, t: float) -> float:
        return self._count_ge(self.neg_sorted, t) / self.neg_sorted.size

    def tpr(self, t: float) -> float:
        return self._count_ge(self.pos_sorted, t) / self.pos_sorted.size

    def pro(self, t: float) -> float:
        total = 0.0
        for comp in self.comp_sorted:
            total += self._count_ge(comp, t) / comp.size
        return total / len(self.comp_sorted)

    def precision(self, t: float) -> float:
        pred = self._count_ge(self.pos_sorted, t) + self._count_ge(self.neg_sorted, t)
        if pred == 0:
            return 1.0
        return self._count_ge(self.pos_sorted, t) / pred

    def mean_iou(self, t: float) -> float:
        total = 0.0
        for m, g in self.per_image:
            pred = m >= t
            union = int((pred | g).sum())
            inter = int((pred & g).sum())
            total += 1.0 if union == 0 else inter / union
        return total / len(self.per_image)


def _capped_integral(points: list[tuple[float, float]], cap: float) -> float:
    """Trapezoidal integral of pro over fpr in [0, cap], normalised by the
    covered span (numerically equal to cap) so a constant-1 curve is 1.0."""
    pts = sorted(points)
    area = 0.0
    span = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if x0 >= cap:
            break
        if x1 > cap:
            y1 = y0 + (y1 - y0) * (cap - x0) / (x1 - x0)
            x1 = cap
        area += (x1 - x0) * (y0 + y1) / 2.0
        span += x1 - x0
    if span == 0.0:
        return 0.0
    return area / span


def pro(maps, masks, cap: float = 0.3, steps: int | None = 500) -> tuple[ProCurve, float]:
    """Per-region-overlap curve and its FPR-capped, normalised integral.

    ``steps=None`` sweeps every unique pooled score (exact, for small data).
    A constant score field cannot be swept; the curve degenerates to the
    all-positive prediction and is flagged as such.
    """
    if not 0.0 < cap <= 1.0:
        raise ConfigError(f"cap must be in (0, 1], got {cap}")
    ctx = _SweepContext(maps, masks)
    if not ctx.comp_sorted:
        raise DataError("no anomalous components anywhere in the ground truth")
    if ctx.neg_sorted.size == 0:
        raise DataError("no normal pixels anywhere in the ground truth")
    thresholds = _pooled_thresholds(ctx.pooled, steps)
    if thresholds.size < 2:
        t = float(thresholds[0])
        point = (ctx.fpr(t), ctx.pro(t))
        curve = ProCurve(points=[point], cap=cap, integral=point[1], degenerate=True)
        return curve, curve.integral
    points = [(0.0, 0.0)]
    points += [(ctx.fpr(t), ctx.pro(t)) for t in thresholds]
    points.sort()
    integral = _capped_integral(points, cap)
    curve = ProCurve(points=points, cap=cap, integral=integral)
    return curve, integral


def curve_points(maps, masks, kind: str, steps: int | None = 500) -> list[tuple[float, float]]:
    """Threshold-swept curve points on the shared quantile grid.

    roc: (fpr, tpr); pro: (fpr, mean per-region overlap); pr: (recall,
    precision); iou: (threshold quantile level, mean per-image IoU).
    """
    ctx = _SweepContext(maps, masks)
    if kind in ("roc", "pro", "pr") and (ctx.pos_sorted.size == 0 or ctx.neg_sorted.size == 0):
        raise DataError("curve needs both anomalous and normal pixels")
    thresholds = _pooled_thresholds(ctx.pooled, steps)
    if kind == "roc":
        pts = [(0.0, 0.0)] + [(ctx.fpr(t), ctx.tpr(t)) for t in thresholds]
        return sorted(pts)
    if kind == "pro":
        if not ctx.comp_sorted:
            raise DataError("no anomalous components anywhere in the ground truth")
        pts = [(0.0, 0.0)] + [(ctx.fpr(t), ctx.pro(t)) for t in thresholds]
        return sorted(pts)
    if kind == "pr":
        return sorted((ctx.tpr(t), ctx.precision(t)) for t in thresholds)
    if kind == "iou":
        if steps is None:
            levels = np.linspace(0.0, 1.0, len(thresholds))
            grid = thresholds[::-1]
        else:
            levels = np.linspace(0.0, 1.0, steps)
            grid = np.quantile(ctx.pooled, levels)
        return [(float(q), ctx.mean_iou(float(t))) for q, t in zip(levels, grid)]
    raise ConfigError(f"unknown curve kind {kind!r}")
