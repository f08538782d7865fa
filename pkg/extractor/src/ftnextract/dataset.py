"""Dataset-layout walking and image/mask loading.

Expects the usual inspection-dataset folder layout:

    root/train/good/*.png          nominal training images
    root/test/good/*.png           nominal test images
    root/test/<defect>/*.png       defective test images
    root/ground_truth/<defect>/<stem>_mask.png

Images are resized to the configured square resolution with antialiased
bilinear interpolation before extraction.  Ground-truth masks resize with
nearest-neighbour so their values stay exactly {0, 1}; a defective test image
without a mask file is an error, a nominal test image gets an all-zero mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


@dataclass
class DatasetImage:
    image_id: str
    path: Path
    original_size: tuple[int, int]  # (H, W) before resizing
    label: str  # "good" or the defect folder name
    mask_path: Path | None  # None for nominal images


def _list_images(folder: Path) -> list[Path]:
    return sorted(p for p in folder.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def _original_size(path: Path) -> tuple[int, int]:
    with Image.open(path) as im:
        return im.height, im.width


def layout_dataset(root: str | Path, split: str) -> list[DatasetImage]:
    root = Path(root)
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    split_dir = root / split
    if not split_dir.is_dir():
        raise FileNotFoundError(f"missing split directory {split_dir}")
    entries: list[DatasetImage] = []
    for category_dir in sorted(p for p in split_dir.iterdir() if p.is_dir()):
        label = category_dir.name
        for img in _list_images(category_dir):
            mask_path = None
            if split == "test" and label != "good":
                mask_path = root / "ground_truth" / label / f"{img.stem}_mask.png"
                if not mask_path.is_file():
                    raise FileNotFoundError(
                        f"defective image {img} has no ground-truth mask at {mask_path}"
                    )
            entries.append(
                DatasetImage(
                    image_id=f"{split}_{label}_{img.stem}",
                    path=img,
                    original_size=_original_size(img),
                    label=label,
                    mask_path=mask_path,
                )
            )
    if not entries:
        raise FileNotFoundError(f"no images found under {split_dir}")
    return entries


def load_image(path: str | Path, size: int) -> np.ndarray:
    """RGB image resized to (size, size), float32 in [0, 1]."""
    with Image.open(path) as im:
        im = im.convert("RGB").resize((size, size), Image.BILINEAR)
        return np.asarray(im, dtype=np.float32) / 255.0


def load_mask(path: str | Path | None, size: int) -> np.ndarray:
    """Binary mask at (size, size) with values exactly {0, 1}."""
    if path is None:
        return np.zeros((size, size), dtype=np.float32)
    with Image.open(path) as im:
        im = im.convert("L").resize((size, size), Image.NEAREST)
        return (np.asarray(im) > 127).astype(np.float32)
