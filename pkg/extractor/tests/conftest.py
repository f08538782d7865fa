import shutil

import numpy as np
import pytest
from PIL import Image

SIZE = 48  # on-disk image size; extraction resizes to its own --size


def _noise_png(path, rng, block=None):
    img = (rng.random((SIZE, SIZE, 3)) * 255).astype(np.uint8)
    if block is not None:
        y, x = block
        img[y : y + 12, x : x + 12] = (255, 32, 32)
    Image.fromarray(img).save(path)


def _mask_png(path, block):
    mask = np.zeros((SIZE, SIZE), dtype=np.uint8)
    y, x = block
    mask[y : y + 12, x : x + 12] = 255
    Image.fromarray(mask).save(path)


@pytest.fixture(scope="session")
def mini_dataset(tmp_path_factory):
    """Tiny inspection-style dataset: train/good, test/{good,scratch},
    ground_truth/scratch.  test/good/copy_of_train.png is byte-identical to a
    training image."""
    root = tmp_path_factory.mktemp("dataset")
    rng = np.random.default_rng(0)
    (root / "train" / "good").mkdir(parents=True)
    for i in range(5):
        _noise_png(root / "train" / "good" / f"{i:03d}.png", rng)
    (root / "test" / "good").mkdir(parents=True)
    shutil.copyfile(
        root / "train" / "good" / "000.png", root / "test" / "good" / "copy_of_train.png"
    )
    _noise_png(root / "test" / "good" / "fresh.png", rng)
    (root / "test" / "scratch").mkdir(parents=True)
    (root / "ground_truth" / "scratch").mkdir(parents=True)
    for i, block in enumerate([(8, 8), (24, 20)]):
        _noise_png(root / "test" / "scratch" / f"{i:03d}.png", rng, block=block)
        _mask_png(root / "ground_truth" / "scratch" / f"{i:03d}_mask.png", block)
    return root
