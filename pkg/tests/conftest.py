import numpy as np
import pytest

from anomatch.matching import PatchSpec, forward_map


def unit_rows(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_instance(rng, max_hw=8, max_c=8, max_n=12, max_patch=5):
    """One randomized matching problem: query, sheets, patch."""
    h = int(rng.integers(2, max_hw + 1))
    w = int(rng.integers(2, max_hw + 1))
    c = int(rng.integers(1, max_c + 1))
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.choice(np.arange(1, max_patch + 1, 2)))
    nn = int(rng.choice(np.arange(1, max_patch + 1, 2)))
    q = rng.standard_normal((h, w, c)).astype(np.float32)
    t = rng.standard_normal((n, h, w, c)).astype(np.float32)
    return q, t, PatchSpec(m, nn)


def cluster_outlier_vectors(seed, clusters=3, per_cluster=30, outliers=5, sigma=0.02, c=8):
    """Orthogonal dense clusters plus mutually-orthogonal far outliers."""
    rng = np.random.default_rng(seed)
    parts = []
    for axis in range(clusters):
        e = np.zeros(c)
        e[axis] = 1.0
        parts.append(unit_rows(e + sigma * rng.standard_normal((per_cluster, c))))
    outs = []
    for i in range(outliers):
        e = np.zeros(c)
        e[(clusters + i) % c] = 1.0
        outs.append(e + sigma * rng.standard_normal(c))
    parts.append(unit_rows(np.array(outs)))
    return np.vstack(parts)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the matching kernels once so individual tests time only math."""
    rng = np.random.default_rng(0)
    q = rng.standard_normal((2, 2, 2)).astype(np.float32)
    t = rng.standard_normal((1, 2, 2, 2)).astype(np.float32)
    forward_map(q, t, PatchSpec(1, 1))
