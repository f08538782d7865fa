import numpy as np
import pytest

from ftnextract.dataset import layout_dataset, load_image, load_mask


def test_train_split_counts(mini_dataset):
    entries = layout_dataset(mini_dataset, "train")
    assert len(entries) == 5
    assert all(e.label == "good" and e.mask_path is None for e in entries)
    assert entries[0].image_id == "train_good_000"
    assert entries[0].original_size == (48, 48)


def test_test_split_pairs_masks(mini_dataset):
    entries = layout_dataset(mini_dataset, "test")
    assert len(entries) == 4
    by_label = {}
    for e in entries:
        by_label.setdefault(e.label, []).append(e)
    assert all(e.mask_path is None for e in by_label["good"])
    assert all(e.mask_path is not None and e.mask_path.is_file() for e in by_label["scratch"])


def test_missing_mask_is_an_error(mini_dataset, tmp_path):
    import shutil

    broken = tmp_path / "broken"
    shutil.copytree(mini_dataset, broken)
    (broken / "ground_truth" / "scratch" / "000_mask.png").unlink()
    with pytest.raises(FileNotFoundError, match="000"):
        layout_dataset(broken, "test")


def test_unknown_split_rejected(mini_dataset):
    with pytest.raises(ValueError):
        layout_dataset(mini_dataset, "validation")


def test_load_image_shape_and_range(mini_dataset):
    img = load_image(mini_dataset / "train" / "good" / "000.png", size=64)
    assert img.shape == (64, 64, 3)
    assert img.dtype == np.float32
    assert 0.0 <= img.min() and img.max() <= 1.0


def test_masks_are_exactly_binary(mini_dataset):
    mask = load_mask(mini_dataset / "ground_truth" / "scratch" / "000_mask.png", size=64)
    assert mask.shape == (64, 64)
    assert set(np.unique(mask)) == {0.0, 1.0}
    empty = load_mask(None, size=32)
    assert not empty.any()
