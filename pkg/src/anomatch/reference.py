"""Brute-force reference implementations, used only by the test suite.

Everything here is deliberately unoptimised: literal loops in plain Python
floats, no caching, no vectorised shortcuts.  These functions share no code
with the engine hot paths; they exist so the optimised kernels, the prototype
selection and the metrics can each be checked against an independent
computation of the same contract.
"""

from __future__ import annotations

import math

import numpy as np

from .matching import PatchSpec
from .selection import SelectionConfig, optics_regions


# ---------------------------------------------------------------------------
# matching


def _to_lists(arr) -> list:
    return np.asarray(arr, dtype=np.float64).tolist()


def _norm_sq(vec: list) -> float:
    s = 0.0
    for v in vec:
        s += v * v
    return s


def _dot(u: list, v: list) -> float:
    s = 0.0
    for a, b in zip(u, v):
        s += a * b
    return s


def _sim(u: list, ns_u: float, v: list, ns_v: float) -> float:
    if ns_u == 0.0 or ns_v == 0.0:
        return 0.0
    return _dot(u, v) / math.sqrt(ns_u * ns_v)


def _clamp_dist(best_sim: float) -> float:
    v = 1.0 - best_sim
    return min(2.0, max(0.0, v))


def _window(y: int, x: int, p: PatchSpec, H: int, W: int):
    for yy in range(max(0, y - p.ry), min(H - 1, y + p.ry) + 1):
        for xx in range(max(0, x - p.rx), min(W - 1, x + p.rx) + 1):
            yield yy, xx


def naive_forward(query, sheets, p: PatchSpec) -> np.ndarray:
    """Literal per-pixel / per-sheet / per-offset forward matching."""
    q = _to_lists(query)
    t = [_to_lists(s) for s in np.asarray(sheets, dtype=np.float64)]
    H, W = len(q), len(q[0])
    ns_q = [[_norm_sq(q[y][x]) for x in range(W)] for y in range(H)]
    ns_t = [[[_norm_sq(t[n][y][x]) for x in range(W)] for y in range(H)] for n in range(len(t))]
    out = np.empty((H, W), dtype=np.float32)
    for y in range(H):
        for x in range(W):
            best = -2.0
            for n in range(len(t)):
                for yy, xx in _window(y, x, p, H, W):
                    s = _sim(q[y][x], ns_q[y][x], t[n][yy][xx], ns_t[n][yy][xx])
                    if s > best:
                        best = s
            out[y, x] = _clamp_dist(best)
    return out


def naive_backward(query, sheets, p: PatchSpec) -> np.ndarray:
    """Literal backward matching: templates at the pixel vs the query patch."""
    q = _to_lists(query)
    t = [_to_lists(s) for s in np.asarray(sheets, dtype=np.float64)]
    H, W = len(q), len(q[0])
    ns_q = [[_norm_sq(q[y][x]) for x in range(W)] for y in range(H)]
    ns_t = [[[_norm_sq(t[n][y][x]) for x in range(W)] for y in range(H)] for n in range(len(t))]
    out = np.empty((H, W), dtype=np.float32)
    for y in range(H):
        for x in range(W):
            best = -2.0
            for n in range(len(t)):
                for yy, xx in _window(y, x, p, H, W):
                    s = _sim(t[n][y][x], ns_t[n][y][x], q[yy][xx], ns_q[yy][xx])
                    if s > best:
                        best = s
            out[y, x] = _clamp_dist(best)
    return out


def naive_mutual(query, sheets, p: PatchSpec, alpha: float) -> np.ndarray:
    fwd = naive_forward(query, sheets, p)
    bwd = naive_backward(query, sheets, p)
    return (alpha * fwd.astype(np.float64) + (1.0 - alpha) * bwd.astype(np.float64)).astype(
        np.float32
    )


def naive_pixel_match(query, sheets) -> np.ndarray:
    """Point baseline: per-pixel min distance over sheets at the same coord."""
    q = _to_lists(query)
    t = [_to_lists(s) for s in np.asarray(sheets, dtype=np.float64)]
    H, W = len(q), len(q[0])
    out = np.empty((H, W), dtype=np.float32)
    for y in range(H):
        for x in range(W):
            ns_q = _norm_sq(q[y][x])
            best = 2.0
            for n in range(len(t)):
                d = _clamp_dist(_sim(q[y][x], ns_q, t[n][y][x], _norm_sq(t[n][y][x])))
                if d < best:
                    best = d
            out[y, x] = best
    return out


def naive_patch_match(query, sheets, p: PatchSpec) -> np.ndarray:
    """Patch baseline: mean-pool the query patch and each sheet's patch, then
    take the min cosine distance over sheets.  Averaging is what lets subtle
    anomalous vectors hide among their nominal neighbours."""
    q = np.asarray(query, dtype=np.float64)
    t = np.asarray(sheets, dtype=np.float64)
    H, W, _ = q.shape
    out = np.empty((H, W), dtype=np.float32)
    for y in range(H):
        for x in range(W):
            coords = list(_window(y, x, p, H, W))
            q_pool = q[[yy for yy, _ in coords], [xx for _, xx in coords]].mean(axis=0)
            ns_q = _norm_sq(list(q_pool))
            best = 2.0
            for n in range(t.shape[0]):
                t_pool = t[n][[yy for yy, _ in coords], [xx for _, xx in coords]].mean(axis=0)
                d = _clamp_dist(_sim(list(q_pool), ns_q, list(t_pool), _norm_sq(list(t_pool))))
                if d < best:
                    best = d
            out[y, x] = best
    return out


# ---------------------------------------------------------------------------
# prototype selection


def naive_pts(vectors: np.ndarray, cfg: SelectionConfig, regions=None) -> list[tuple[int, str]]:
    """Step-by-step replay of the two-stage selection at one pixel.

    Returns (source_index, kind) in selection order.  The density regions are
    an input of the algorithm; by default they come from the same public
    clustering routine the engine consumes, so the replay isolates the
    centre/greedy selection arithmetic.
    """
    V = [list(map(float, row)) for row in np.asarray(vectors, dtype=np.float64)]
    n = len(V)
    ns = [_norm_sq(v) for v in V]
    if regions is None:
        regions = optics_regions(np.asarray(vectors), cfg)
    k = min(cfg.k, n)

    def centre(members: list[int]) -> int:
        best_idx, best_sum = members[0], -math.inf
        for i in members:
            total = 0.0
            for j in members:
                total += _sim(V[i], ns[i], V[j], ns[j])
            if total > best_sum:
                best_idx, best_sum = i, total
        return best_idx

    chosen: list[tuple[int, str]] = []
    if regions:
        if len(regions) > k:
            order = sorted(range(len(regions)), key=lambda i: (-len(regions[i]), i))[:k]
            kept = [regions[i] for i in sorted(order)]
        else:
            kept = list(regions)
        for r in kept:
            chosen.append((centre(sorted(int(i) for i in r)), "easy"))
    else:
        chosen.append((centre(list(range(n))), "global"))
    while len(chosen) < k:
        selected = {i for i, _ in chosen}
        best_idx, best_obj = -1, -math.inf
        for w in range(n):
            if w in selected:
                continue
            obj = 0.0
            for i, _ in chosen:
                obj += 1.0 - _sim(V[w], ns[w], V[i], ns[i])
            if obj > best_obj:
                best_idx, best_obj = w, obj
        if best_idx < 0:
            break
        chosen.append((best_idx, "hard"))
    return chosen


def naive_selection_baselines(
    vectors: np.ndarray, k: int, kind: str, seed: int = 0
) -> np.ndarray:
    """Selection baselines for coverage comparisons: seeded random members,
    or k-means centroids (which need not be members at all)."""
    V = np.asarray(vectors, dtype=np.float64)
    if kind == "random":
        rng = np.random.default_rng(seed)
        idx = rng.choice(V.shape[0], size=min(k, V.shape[0]), replace=False)
        return V[np.sort(idx)]
    if kind == "kmeans":
        from sklearn.cluster import KMeans

        # random member init, single restart: the conventional fast
        # centroid-selection setup this baseline stands in for
        km = KMeans(n_clusters=min(k, V.shape[0]), n_init=1, init="random", random_state=seed)
        km.fit(V)
        return np.asarray(km.cluster_centers_, dtype=np.float64)
    raise ValueError(f"unknown baseline kind {kind!r}")


def coverage_radius(vectors: np.ndarray, selected: np.ndarray) -> float:
    """Worst-case coverage: max over vectors of min cosine distance to the
    selected set."""
    worst = 0.0
    Vs = [list(map(float, row)) for row in np.asarray(vectors, dtype=np.float64)]
    Ss = [list(map(float, row)) for row in np.asarray(selected, dtype=np.float64)]
    ns_v = [_norm_sq(v) for v in Vs]
    ns_s = [_norm_sq(s) for s in Ss]
    for v, nv in zip(Vs, ns_v):
        best = 2.0
        for s, nsq in zip(Ss, ns_s):
            d = _clamp_dist(_sim(v, nv, s, nsq))
            if d < best:
                best = d
        if best > worst:
            worst = best
    return worst


# ---------------------------------------------------------------------------
# metrics


def naive_auroc(scores, labels) -> float:
    """All-pairs rank statistic: P(pos > neg) + 0.5 P(pos == neg)."""
    pos = [float(s) for s, l in zip(scores, labels) if l]
    neg = [float(s) for s, l in zip(scores, labels) if not l]
    if not pos or not neg:
        raise ValueError("need both classes")
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def _flood_components(mask: np.ndarray) -> list[list[tuple[int, int]]]:
    """8-connected components by BFS, raster first-pixel order."""
    m = np.asarray(mask).astype(bool)
    H, W = m.shape
    seen = np.zeros_like(m, dtype=bool)
    comps = []
    for y0 in range(H):
        for x0 in range(W):
            if not m[y0, x0] or seen[y0, x0]:
                continue
            queue = [(y0, x0)]
            seen[y0, x0] = True
            comp = []
            while queue:
                y, x = queue.pop()
                comp.append((y, x))
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        yy, xx = y + dy, x + dx
                        if 0 <= yy < H and 0 <= xx < W and m[yy, xx] and not seen[yy, xx]:
                            seen[yy, xx] = True
                            queue.append((yy, xx))
            comps.append(comp)
    return comps


def naive_pro(maps, masks, cap: float = 0.3) -> float:
    """All-unique-threshold per-region-overlap integral, literal masking."""
    maps = [np.asarray(m, dtype=np.float64) for m in maps]
    masks = [np.asarray(g).astype(bool) for g in masks]
    comps = [_flood_components(g) for g in masks]
    n_comp = sum(len(c) for c in comps)
    if n_comp == 0:
        raise ValueError("no anomalous components in ground truth")
    neg_total = sum(int((~g).sum()) for g in masks)
    pooled = np.concatenate([m.reshape(-1) for m in maps])
    thresholds = np.unique(pooled)[::-1]
    if thresholds.size < 2:
        return 1.0
    points = [(0.0, 0.0)]
    for t in thresholds:
        fp = 0
        pro_sum = 0.0
        for m, g, cs in zip(maps, masks, comps):
            pred = m >= t
            fp += int((pred & ~g).sum())
            for comp in cs:
                hit = sum(1 for (y, x) in comp if pred[y, x])
                pro_sum += hit / len(comp)
        points.append((fp / neg_total, pro_sum / n_comp))
    points.sort()
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    area = 0.0
    for i in range(len(xs) - 1):
        x0, x1 = xs[i], xs[i + 1]
        y0, y1 = ys[i], ys[i + 1]
        if x0 >= cap:
            break
        if x1 > cap:
            y1 = y0 + (y1 - y0) * (cap - x0) / (x1 - x0)
            x1 = cap
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area / cap
