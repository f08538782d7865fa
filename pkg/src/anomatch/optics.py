"""Density-based region extraction on a precomputed distance matrix.

This is the classic reachability-ordering analysis: every point gets a core
distance (distance to its min_samples-th neighbour, itself included), points
are expanded in order of smallest current reachability, and clusters are read
off the reachability plot as xi-steep valleys.  Everything is exact and
O(N^2); the per-pixel template sets this runs on hold at most a few hundred
vectors, so reproducibility is worth far more than asymptotics here.

Two boundary rules matter and are deliberate:

* a virtual infinite reachability is appended after the last plot position so
  a dense run that touches the end of the ordering can still close a valley;
* a candidate valley spanning the *entire* plot is discarded.  A cluster that
  contains every point carries no density contrast, and a structureless
  (flat) plot therefore yields no regions at all, which is what lets callers
  fall back to a global centre.
"""

from __future__ import annotations

import numpy as np


def reachability_analysis(dist: np.ndarray, min_samples: int):
    """Expansion order and reachability distances for a full distance matrix.

    Returns (ordering, reachability) with reachability indexed by point.  The
    first point of each connected sweep keeps reachability +inf.
    """
    d = np.asarray(dist, dtype=np.float64)
    n = d.shape[0]
    if d.shape != (n, n):
        raise ValueError(f"distance matrix must be square, got {d.shape}")
    core = np.sort(d, axis=1)[:, min_samples - 1]
    reach = np.full(n, np.inf)
    processed = np.zeros(n, dtype=bool)
    ordering = np.empty(n, dtype=np.intp)
    for step in range(n):
        candidates = np.flatnonzero(~processed)
        point = candidates[np.argmin(reach[candidates])]
        processed[point] = True
        ordering[step] = point
        rest = np.flatnonzero(~processed)
        if rest.size:
            new_reach = np.maximum(core[point], d[point, rest])
            reach[rest] = np.minimum(reach[rest], new_reach)
    return ordering, reach


def _extend_region(steep: np.ndarray, opposite: np.ndarray, start: int, min_samples: int) -> int:
    """Grow a steep area from ``start``: tolerate at most min_samples
    consecutive non-steep points, stop on any move in the opposite direction."""
    n = len(steep)
    end = start
    run = 0
    i = start + 1
    while i < n:
        if steep[i]:
            run = 0
            end = i
        elif not opposite[i]:
            run += 1
            if run > min_samples:
                break
        else:
            break
        i += 1
    return end


def _filter_start_areas(areas: list[dict], mib: float, xi_c: float, plot: np.ndarray) -> list[dict]:
    if np.isinf(mib):
        return []
    kept = [a for a in areas if mib <= plot[a["start"]] * xi_c]
    for a in kept:
        a["mib"] = max(a["mib"], mib)
    return kept


def xi_valleys(plot_values: np.ndarray, xi: float, min_samples: int) -> list[tuple[int, int]]:
    """Candidate clusters as inclusive (start, end) positions in the plot.

    ``plot_values`` is the reachability sequence in expansion order (no
    sentinel; it is appended here).
    """
    n = len(plot_values)
    plot = np.append(np.asarray(plot_values, dtype=np.float64), np.inf)
    xi_c = 1.0 - xi
    with np.errstate(invalid="ignore"):
        steep_up = plot[:-1] <= plot[1:] * xi_c
        steep_down = plot[:-1] * xi_c >= plot[1:]
        upward = plot[:-1] < plot[1:]
        downward = plot[:-1] > plot[1:]

    clusters: list[tuple[int, int]] = []
    start_areas: list[dict] = []
    index = 0
    mib = 0.0
    for steep_index in np.flatnonzero(steep_up | steep_down):
        steep_index = int(steep_index)
        if steep_index < index:
            continue
        mib = max(mib, float(plot[index : steep_index + 1].max()))
        if steep_down[steep_index]:
            start_areas = _filter_start_areas(start_areas, mib, xi_c, plot)
            d_end = _extend_region(steep_down, upward, steep_index, min_samples)
            start_areas.append({"start": steep_index, "end": d_end, "mib": 0.0})
            index = d_end + 1
            mib = float(plot[index]) if index < len(plot) else np.inf
        else:
            u_start = steep_index
            u_end = _extend_region(steep_up, downward, u_start, min_samples)
            index = u_end + 1
            mib = float(plot[index]) if index < len(plot) else np.inf
            for area in start_areas:
                c_start, c_end = area["start"], u_end
                # the valley floor must sit xi-deep below whatever follows
                if plot[c_end + 1] * xi_c < area["mib"]:
                    continue
                d_max = plot[area["start"]]
                if d_max * xi_c >= plot[c_end + 1]:
                    while c_start < area["end"] and plot[c_start + 1] > plot[c_end + 1]:
                        c_start += 1
                elif plot[c_end + 1] * xi_c >= d_max:
                    while c_end > u_start and plot[c_end - 1] > d_max:
                        c_end -= 1
                if c_end - c_start + 1 < min_samples:
                    continue
                if c_start > area["end"]:
                    continue
                if c_end < u_start:
                    continue
                if c_start == 0 and c_end == n - 1:
                    continue  # whole-plot valley: no contrast
                clusters.append((c_start, c_end))
    return clusters


def extract_regions(dist: np.ndarray, min_samples: int, xi: float) -> list[np.ndarray]:
    """Disjoint high-density regions (original point indices, sorted).

    Nested valley candidates resolve innermost-first; points in no surviving
    valley are left out.  Fewer points than min_samples yields no regions.
    """
    n = np.asarray(dist).shape[0]
    if n < min_samples:
        return []
    ordering, reach = reachability_analysis(dist, min_samples)
    clusters = xi_valleys(reach[ordering], xi, min_samples)
    clusters.sort(key=lambda c: (c[1], -c[0]))
    taken = np.zeros(n, dtype=bool)
    regions: list[np.ndarray] = []
    for s, e in clusters:
        if taken[s : e + 1].any():
            continue
        taken[s : e + 1] = True
        regions.append(np.sort(ordering[s : e + 1]))
    return regions
