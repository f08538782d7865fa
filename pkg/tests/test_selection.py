import numpy as np
import pytest

from anomatch import reference as ref
from anomatch.bank import build_bank
from anomatch.errors import ConfigError, DataError
from anomatch.selection import (
    SelectionConfig,
    compress_bank,
    global_centre,
    optics_regions,
    region_centre,
    select_hard,
    select_pixel_prototypes,
)
from anomatch.tensors import FeatureMap
from conftest import cluster_outlier_vectors, unit_rows

CFG = SelectionConfig(k=4)


def two_blobs(seed=0, n1=10, n2=10, c=3, sigma=0.01):
    rng = np.random.default_rng(seed)
    a = unit_rows(np.array([1.0, 0, 0])[:c] + sigma * rng.standard_normal((n1, c)))
    b = unit_rows(np.array([0.0, 1, 0])[:c] + sigma * rng.standard_normal((n2, c)))
    return np.vstack([a, b])


# --- density regions --------------------------------------------------------


def test_two_blobs_partition():
    V = two_blobs()
    regions = optics_regions(V, SelectionConfig(k=4, min_samples=5, xi=0.05))
    assert len(regions) == 2
    merged = np.sort(np.concatenate(regions))
    assert np.array_equal(merged, np.arange(20))
    groups = {frozenset(map(int, r)) for r in regions}
    assert groups == {frozenset(range(10)), frozenset(range(10, 20))}


def test_too_few_points_no_regions():
    V = np.eye(3)
    assert optics_regions(V, SelectionConfig(k=2, min_samples=5)) == []


def test_scattered_points_no_regions():
    # mutually orthogonal: every pairwise distance is exactly 1, the
    # reachability plot is flat, so there is no steep valley to extract
    V = np.eye(30)
    assert optics_regions(V, SelectionConfig(k=8, min_samples=5, xi=0.05)) == []


# --- centres ----------------------------------------------------------------


def test_region_centre_all_identical_ties_low():
    V = np.tile(np.array([0.5, 0.5]), (4, 1))
    vec, idx = region_centre(V)
    assert idx == 0
    assert np.array_equal(vec, V[0])


def test_region_centre_three_vectors():
    V = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    vec, idx = region_centre(V)
    # similarity sums: 1.707, 1.707, 2.414
    assert idx == 2
    assert np.array_equal(vec, V[2])


def test_region_centre_two_member_tie():
    vec, idx = region_centre(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert idx == 0
    assert np.array_equal(vec, [1.0, 0.0])


def test_global_centre_singleton():
    vec, idx = global_centre(np.array([[0.3, 0.4]]))
    assert idx == 0


def test_global_centre_matches_region_centre():
    V = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    assert global_centre(V)[1] == 2


def test_global_centre_orthonormal_tie():
    vec, idx = global_centre(np.eye(3))
    assert idx == 0


# --- hard selection ---------------------------------------------------------


def test_select_hard_prefers_antipode():
    V = np.array([[1.0, 0.0], [0.99, 0.14], [-1.0, 0.0]])
    vec, idx = select_hard(V, current=[0])
    assert idx == 2
    assert np.array_equal(vec, [-1.0, 0.0])


def test_select_hard_degenerate_tie():
    V = np.tile(np.array([1.0, 0.0]), (4, 1))
    _, idx = select_hard(V, current=[1])
    assert idx == 0  # all objectives equal, lowest index wins


def test_select_hard_exhausted():
    V = np.array([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(DataError, match="exhausted"):
        select_hard(V, current=[0, 1])


# --- full per-pixel selection ----------------------------------------------


def test_k_equals_n_selects_everything():
    rng = np.random.default_rng(1)
    V = rng.standard_normal((7, 4))
    chosen = select_pixel_prototypes(V, SelectionConfig(k=7))
    assert sorted(chosen.indices) == list(range(7))


def test_blob_plus_outliers_trace():
    # dense cluster + 3 mutually orthogonal far outliers; with K=4 the
    # selection is the cluster's central member plus all three outliers
    rng = np.random.default_rng(2)
    blob = unit_rows(np.array([1.0, 0, 0, 0]) + 0.01 * rng.standard_normal((12, 4)))
    outs = np.array([[0.0, 1, 0, 0], [0.0, 0, 1, 0], [0.0, 0, 0, 1]])
    V = np.vstack([blob, outs])
    chosen = select_pixel_prototypes(V, CFG)
    assert set(chosen.indices[1:]) == {12, 13, 14}
    assert chosen.indices[0] < 12  # a blob member
    assert chosen.kinds[1:] == ["hard", "hard", "hard"]


def test_k1_picks_largest_region_centre():
    V = two_blobs(n1=6, n2=10)
    chosen = select_pixel_prototypes(V, SelectionConfig(k=1, min_samples=5))
    assert len(chosen) == 1
    assert chosen.kinds == ["easy"]
    assert 6 <= chosen.indices[0] < 16  # centre of the larger blob


def test_matches_naive_replay():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        V = rng.standard_normal((rng.integers(8, 40), 5))
        cfg = SelectionConfig(k=int(rng.integers(1, min(8, V.shape[0]) + 1)))
        engine = select_pixel_prototypes(V, cfg)
        naive = ref.naive_pts(V, cfg)
        assert engine.indices == [i for i, _ in naive]
        assert engine.kinds == [k for _, k in naive]


def test_subset_and_cardinality():
    rng = np.random.default_rng(3)
    V = rng.standard_normal((9, 6)).astype(np.float32)
    chosen = select_pixel_prototypes(V, SelectionConfig(k=5))
    assert len(chosen) == 5
    assert len(set(chosen.indices)) == 5
    for vec, idx in zip(chosen.vectors, chosen.indices):
        assert np.array_equal(vec, V[idx].astype(np.float64))


def test_selection_deterministic():
    V = cluster_outlier_vectors(11)
    cfg = SelectionConfig(k=8, xi=0.3)
    a = select_pixel_prototypes(V, cfg)
    b = select_pixel_prototypes(V, cfg)
    assert a.indices == b.indices


# --- bank compression -------------------------------------------------------


def _bank(rng, n=8, shape=(4, 4, 3)):
    images = [
        {1: FeatureMap(layer_id=1, data=rng.standard_normal(shape).astype(np.float32))}
        for _ in range(n)
    ]
    return build_bank(images)


def test_compress_bank_shapes_and_flags():
    rng = np.random.default_rng(4)
    bank = _bank(rng)
    tiny = compress_bank(bank, SelectionConfig(k=3))
    assert tiny.sheet_count == 3
    assert tiny.compressed
    assert tiny.pts == {"K": 3, "min_samples": 5, "xi": 0.05}
    assert tiny.layers[1].shape == (3, 4, 4, 3)


def test_compress_bank_subset_property():
    rng = np.random.default_rng(5)
    bank = _bank(rng, n=6)
    tiny = compress_bank(bank, SelectionConfig(k=4))
    orig = bank.layers[1]
    comp = tiny.layers[1]
    for y in range(orig.shape[1]):
        for x in range(orig.shape[2]):
            originals = {orig[s, y, x].tobytes() for s in range(orig.shape[0])}
            selected = [comp[k, y, x].tobytes() for k in range(comp.shape[0])]
            assert len(set(selected)) == 4
            assert set(selected) <= originals


def test_compress_k_equals_n_is_permutation():
    rng = np.random.default_rng(6)
    bank = _bank(rng, n=5)
    tiny = compress_bank(bank, SelectionConfig(k=5))
    orig = bank.layers[1]
    comp = tiny.layers[1]
    for y in range(orig.shape[1]):
        for x in range(orig.shape[2]):
            assert {orig[s, y, x].tobytes() for s in range(5)} == {
                comp[k, y, x].tobytes() for k in range(5)
            }


def test_compress_workers_equivalent():
    rng = np.random.default_rng(7)
    bank = _bank(rng, n=6)
    a = compress_bank(bank, SelectionConfig(k=2), workers=1)
    b = compress_bank(bank, SelectionConfig(k=2), workers=4)
    assert a.layers[1].tobytes() == b.layers[1].tobytes()


def test_compress_k_too_large():
    rng = np.random.default_rng(8)
    with pytest.raises(ConfigError, match="exceeds"):
        compress_bank(_bank(rng, n=3), SelectionConfig(k=4))


def test_config_validation():
    with pytest.raises(ConfigError):
        SelectionConfig(k=0)
    with pytest.raises(ConfigError):
        SelectionConfig(k=1, min_samples=1)
    with pytest.raises(ConfigError):
        SelectionConfig(k=1, xi=1.0)
