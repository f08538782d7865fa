"""Checks on the brute-force references themselves, plus the matching-strategy
ablation they exist to support: per-pixel matching false-alarms on jittered
nominal content, patch-pooled matching dilutes small anomalies, and the
window-searched forward matching avoids both failure modes.
"""

import numpy as np

from anomatch import reference as ref
from anomatch.matching import PatchSpec, forward_map
from anomatch.metrics import auroc
from conftest import cluster_outlier_vectors, unit_rows

PATCH = PatchSpec(3, 3)


def _smooth_field(rng, h=10, w=10, c=6, jitter=0.45):
    """Unit-vector field: shared smooth base + strong per-pixel jitter in the
    first three channels.  Channels 4+ stay free for injected anomalies."""
    base = np.zeros((h, w, c))
    base[..., 0] = 1.0
    yy, xx = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w), indexing="ij")
    base[..., 1] = 0.3 * yy
    base[..., 2] = 0.3 * xx
    noise = np.zeros((h, w, c))
    noise[..., :3] = jitter * rng.standard_normal((h, w, 3))
    return unit_rows(base + noise).astype(np.float32)


def _crop(field, dy, dx, size=8, pad=2):
    return field[pad + dy : pad + dy + size, pad + dx : pad + dx + size]


def test_constant_fields_score_zero():
    field = np.tile(np.array([1.0, 2.0, 0.5], dtype=np.float32), (4, 4, 1))
    sheets = field[None]
    assert not ref.naive_pixel_match(field, sheets).any()
    assert not ref.naive_patch_match(field, sheets, PATCH).any()


def test_pixel_match_is_one_by_one_forward():
    rng = np.random.default_rng(0)
    q = rng.standard_normal((4, 4, 3)).astype(np.float32)
    t = rng.standard_normal((3, 4, 4, 3)).astype(np.float32)
    assert np.array_equal(ref.naive_pixel_match(q, t), ref.naive_forward(q, t, PatchSpec(1, 1)))


def test_shifted_prototype_inside_patch():
    # nominal content displaced by one pixel: per-pixel matching pays the
    # full displacement cost, window-searched matching finds the prototype
    rng = np.random.default_rng(1)
    field = _smooth_field(rng)
    sheets = field[:, : field.shape[1] - 1][None]
    shifted = field[:, 1:]
    point = ref.naive_pixel_match(shifted, sheets)
    fwd = forward_map(shifted, sheets, PATCH)
    hot = np.unravel_index(np.argmax(point), point.shape)
    assert fwd[hot] < point[hot]
    assert fwd.max() < 0.25 * point.max()


def test_matching_strategy_quality_ordering():
    """Detection AUROC over mixed hard-nominal and subtle-anomalous queries:
    per-pixel < patch-pooled < window-searched forward matching.

    Hard nominals are one-pixel displacements of the template content: the
    per-pixel baseline pays the full local direction change, pooled patches
    mostly average it away, window search finds the prototype exactly.  Block
    anomalies are mild off-manifold twists (visible pooled, but milder than a
    displacement looks to the per-pixel baseline); point anomalies vanish
    into the pooled mean but are blatant to everything per-pixel.
    """
    for seed in range(5):
        rng = np.random.default_rng(seed)
        field = _smooth_field(rng, h=12, w=12)
        sheets = _crop(field, 0, 0)[None]
        scores = {"point": [], "patch": [], "forward": []}
        labels = []

        def add(query, label):
            scores["point"].append(float(ref.naive_pixel_match(query, sheets).max()))
            scores["patch"].append(float(ref.naive_patch_match(query, sheets, PATCH).max()))
            scores["forward"].append(float(forward_map(query, sheets, PATCH).max()))
            labels.append(label)

        for _ in range(4):  # easy nominals: exact repeats
            add(_crop(field, 0, 0).copy(), False)
        shifts = [(0, 1), (1, 0), (0, -1), (-1, 0), (1, 1), (-1, -1)]
        for dy, dx in shifts:  # hard nominals: displaced content
            add(np.ascontiguousarray(_crop(field, dy, dx)), False)
        for _ in range(5):  # block anomalies: a 3x3 region twisted off-manifold
            q = _crop(field, 0, 0).astype(np.float64).copy()
            y, x = rng.integers(1, 5, size=2)
            twist = np.zeros(6)
            twist[3] = float(rng.uniform(0.5, 0.7))
            q[y : y + 3, x : x + 3] = unit_rows(q[y : y + 3, x : x + 3] + twist)
            add(q.astype(np.float32), True)
        for _ in range(5):  # point anomalies: one vector replaced outright
            q = _crop(field, 0, 0).copy()
            y, x = rng.integers(0, 8, size=2)
            v = np.zeros(6, dtype=np.float32)
            v[4 + int(rng.integers(0, 2))] = 1.0
            q[y, x] = v
            add(q, True)

        quality = {k: auroc(np.array(v), np.array(labels)) for k, v in scores.items()}
        assert quality["point"] < quality["patch"] < quality["forward"], quality


def test_random_baseline_reproducible():
    V = cluster_outlier_vectors(3)
    a = ref.naive_selection_baselines(V, 8, "random", seed=5)
    b = ref.naive_selection_baselines(V, 8, "random", seed=5)
    assert np.array_equal(a, b)
    c = ref.naive_selection_baselines(V, 8, "random", seed=6)
    assert not np.array_equal(a, c)


def test_kmeans_misses_farthest_outlier():
    from anomatch.selection import SelectionConfig, select_pixel_prototypes

    V = cluster_outlier_vectors(0)
    cfg = SelectionConfig(k=8, xi=0.3)
    chosen = select_pixel_prototypes(V, cfg)
    km = ref.naive_selection_baselines(V, 8, "kmeans", seed=0)

    def nearest(selected, vec):
        return min(
            1.0 - float(np.dot(vec, s)) / (np.linalg.norm(vec) * np.linalg.norm(s))
            for s in selected
        )

    # farthest original vector from the k-means centroids
    worst = max(range(V.shape[0]), key=lambda i: nearest(km, V[i]))
    assert nearest(km, V[worst]) > nearest(chosen.vectors, V[worst])


def test_naive_metrics_perfect_predictor():
    mask = np.zeros((8, 8), dtype=np.uint8)
    mask[2:4, 2:5] = 1
    amap = np.where(mask != 0, 0.9, 0.1)
    assert ref.naive_auroc(amap.reshape(-1), mask.reshape(-1) != 0) == 1.0
    assert ref.naive_pro([amap], [mask]) == 1.0
