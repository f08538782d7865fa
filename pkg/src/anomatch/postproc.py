"""Detection and localization post-processing for aggregated anomaly maps.

Detection score: global max of the Gaussian-blurred map.  Localization map:
plain 0-1 normalization of the raw map, nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class PostConfig:
    """Gaussian smoothing parameters for the detection score."""

    sigma: float = 6.8
    truncate: float = 4.0  # kernel radius = round(truncate * sigma) pixels

    def __post_init__(self):
        if self.sigma <= 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if self.truncate <= 0:
            raise ConfigError(f"truncate must be > 0, got {self.truncate}")


def _as_map(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"expected 2-D map, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError("map contains non-finite values")
    return arr


def gaussian_blur(values: np.ndarray, cfg: PostConfig = PostConfig()) -> np.ndarray:
    """Separable Gaussian convolution, reflect padding, truncated kernel."""
    arr = _as_map(values)
    out = ndimage.gaussian_filter(arr, sigma=cfg.sigma, mode="reflect", truncate=cfg.truncate)
    return out.astype(np.float32)


def image_score(values: np.ndarray, cfg: PostConfig = PostConfig()) -> float:
    """Detection score for one image: global max of the blurred map."""
    return float(gaussian_blur(values, cfg).max())


def normalize01(values: np.ndarray) -> np.ndarray:
    """(v - min) / (max - min); a constant map normalizes to all zeros since
    a flat map carries no localization signal."""
    arr = _as_map(values)
    lo = arr.min()
    hi = arr.max()
    if hi == lo:
        return np.zeros_like(arr, dtype=np.float32)
    return ((arr - lo) / (hi - lo)).astype(np.float32)
