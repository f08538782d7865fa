"""Prototype selection: compress an N-sheet bank into a K-sheet bank.

Independently at every pixel, the N template vectors are reduced to K by a
two-step policy: first one "easy" prototype per high-density region (the
member most similar to its region; the global centre if no regions exist),
then greedy "hard" prototypes, each the remaining member farthest in summed
cosine distance from everything already selected.  Prototypes are always
exact members of the original pixel set, never averages, so the compressed
bank stays a strict per-pixel subset of the original.

The k-th selected prototype of every pixel is grouped into output sheet k;
those sheets are synthetic composites ordered by selection rank, which is
fine because matching treats the per-pixel vectors as an unordered set.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bank import TemplateBank, _now
from .errors import ConfigError, DataError
from .optics import extract_regions

DEFAULT_MIN_SAMPLES = 5
DEFAULT_XI = 0.05


@dataclass(frozen=True)
class SelectionConfig:
    """Target sheet count plus the density-clustering parameters."""

    k: int
    min_samples: int = DEFAULT_MIN_SAMPLES
    xi: float = DEFAULT_XI

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.min_samples < 2:
            raise ConfigError(f"min_samples must be >= 2, got {self.min_samples}")
        if not 0.0 < self.xi < 1.0:
            raise ConfigError(f"xi must be in (0, 1), got {self.xi}")

    def as_manifest(self) -> dict:
        return {"K": self.k, "min_samples": self.min_samples, "xi": self.xi}


@dataclass
class PixelPrototypeSet:
    """Selected prototypes at one pixel, in selection order.

    kinds[i] is "easy" (region centre), "global" (fallback centre) or "hard"
    (greedy farthest member).
    """

    indices: list[int]
    kinds: list[str]
    vectors: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2:
        raise DataError(f"expected (N, C) vectors, got shape {v.shape}")
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return v / safe


def _similarity_matrix(vectors: np.ndarray) -> np.ndarray:
    u = _unit_rows(vectors)
    return u @ u.T


def optics_regions(vectors: np.ndarray, cfg: SelectionConfig) -> list[np.ndarray]:
    """High-density regions of a pixel's template vectors under cosine
    distance.  Returns disjoint, sorted index arrays; possibly none."""
    v = np.asarray(vectors, dtype=np.float64)
    if v.shape[0] < cfg.min_samples:
        return []
    dist = np.clip(1.0 - _similarity_matrix(v), 0.0, 2.0)
    return extract_regions(dist, cfg.min_samples, cfg.xi)


def region_centre(vectors: np.ndarray) -> tuple[np.ndarray, int]:
    """The member maximising summed cosine similarity to all members.
    Ties break toward the lowest index."""
    v = np.asarray(vectors, dtype=np.float64)
    if v.shape[0] < 1:
        raise DataError("empty region")
    sums = _similarity_matrix(v).sum(axis=1)
    idx = int(np.argmax(sums))
    return v[idx], idx


def global_centre(vectors: np.ndarray) -> tuple[np.ndarray, int]:
    """Centre of the full pixel set; same objective and tie rule as
    region_centre, evaluated over every vector."""
    return region_centre(vectors)


def select_hard(vectors: np.ndarray, current: list[int]) -> tuple[np.ndarray, int]:
    """Next hard prototype: the unselected member with the largest summed
    cosine distance to the already-selected set.  Ties break low."""
    v = np.asarray(vectors, dtype=np.float64)
    if not current:
        raise DataError("current prototype set is empty")
    n = v.shape[0]
    remaining = [i for i in range(n) if i not in set(current)]
    if not remaining:
        raise DataError("selection exhausted: no candidates remain")
    sims = _similarity_matrix(v)[:, current].sum(axis=1)
    objective = len(current) - sims
    objective[sorted(set(current))] = -np.inf
    idx = int(np.argmax(objective))
    return v[idx], idx


def select_pixel_prototypes(vectors: np.ndarray, cfg: SelectionConfig) -> PixelPrototypeSet:
    """Run the full two-step selection at one pixel."""
    v = np.asarray(vectors, dtype=np.float64)
    n = v.shape[0]
    if cfg.k > n:
        raise ConfigError(f"k={cfg.k} exceeds available sheets N={n}")
    sims = _similarity_matrix(v)
    regions = (
        extract_regions(np.clip(1.0 - sims, 0.0, 2.0), cfg.min_samples, cfg.xi)
        if n >= cfg.min_samples
        else []
    )
    indices: list[int] = []
    kinds: list[str] = []
    if regions:
        if len(regions) > cfg.k:
            # keep the K largest regions (ties by first-seen), in seen order
            order = sorted(range(len(regions)), key=lambda i: (-len(regions[i]), i))[: cfg.k]
            regions = [regions[i] for i in sorted(order)]
        for members in regions:
            members = np.asarray(members, dtype=np.intp)
            local = int(np.argmax(sims[np.ix_(members, members)].sum(axis=1)))
            indices.append(int(members[local]))
            kinds.append("easy")
    else:
        indices.append(int(np.argmax(sims.sum(axis=1))))
        kinds.append("global")
    k = min(cfg.k, n)
    while len(indices) < k:
        objective = len(indices) - sims[:, indices].sum(axis=1)
        objective[indices] = -np.inf
        nxt = int(np.argmax(objective))
        indices.append(nxt)
        kinds.append("hard")
    return PixelPrototypeSet(indices=indices, kinds=kinds, vectors=v[indices].copy())


def _select_layer(stack: np.ndarray, cfg: SelectionConfig, workers: int) -> np.ndarray:
    """Per-pixel selection over one (N, H, W, C) layer -> (K, H, W) indices."""
    n, h, w, _ = stack.shape
    k = min(cfg.k, n)
    picks = np.empty((k, h, w), dtype=np.intp)

    def run_row(y: int) -> None:
        for x in range(w):
            chosen = select_pixel_prototypes(stack[:, y, x, :], cfg)
            picks[:, y, x] = chosen.indices

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_row, range(h)))
    else:
        for y in range(h):
            run_row(y)
    return picks


def compress_bank(bank: TemplateBank, cfg: SelectionConfig, workers: int = 1) -> TemplateBank:
    """Compress every layer of a bank to K sheets by per-pixel selection."""
    n = bank.sheet_count
    if cfg.k > n:
        raise ConfigError(f"k={cfg.k} exceeds bank sheet count N={n}")
    layers: dict[int, np.ndarray] = {}
    for lid in bank.layer_ids:
        stack = bank.layers[lid]
        picks = _select_layer(stack, cfg, workers)
        k, h, w = picks.shape
        out = np.empty((k, h, w, stack.shape[3]), dtype=np.float32)
        for rank in range(k):
            yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
            out[rank] = stack[picks[rank], yy, xx, :]
        layers[lid] = out
    return TemplateBank(
        layers=layers,
        sources=[f"prototype_rank_{r:02d}" for r in range(cfg.k)],
        compressed=True,
        pts=cfg.as_manifest(),
        created=_now(),
    )
