"""Frozen-backbone feature extraction to FTN tensors and image manifests."""

from .backbone import BACKBONES, FeatureTap
from .dataset import DatasetImage, layout_dataset, load_image, load_mask
from .extract import ExtractSpec, run_extract
from .ftn import write_ftn

__version__ = "0.1.0"

__all__ = [
    "BACKBONES",
    "DatasetImage",
    "ExtractSpec",
    "FeatureTap",
    "layout_dataset",
    "load_image",
    "load_mask",
    "run_extract",
    "write_ftn",
]
