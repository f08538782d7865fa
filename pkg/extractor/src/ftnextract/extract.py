"""Extraction runs: dataset images -> per-layer FTN tensors + a manifest the
matching engine's CLI consumes verbatim."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .backbone import FeatureTap
from .dataset import layout_dataset, load_image, load_mask
from .ftn import write_ftn

MANIFEST_VERSION = 1


@dataclass
class ExtractSpec:
    dataset_root: Path
    output_root: Path
    split: str = "train"
    layers: list[int] = field(default_factory=lambda: [1, 2, 3])
    size: int = 256
    backbone: str = "wide_resnet101_2"
    weights: str = "download"

    def __post_init__(self):
        self.dataset_root = Path(self.dataset_root)
        self.output_root = Path(self.output_root)
        if self.size < 32:
            raise ValueError(f"input resolution too small: {self.size}")


def run_extract(spec: ExtractSpec) -> Path:
    """Extract every image of the split; returns the manifest path.

    Output layout: one `<image_id>_l<layer>.ftn` per (image, layer), test
    masks under `truth/<image_id>.ftn`, and `manifest.json` listing images,
    layer files, source sizes and the weight fingerprint.
    """
    entries = layout_dataset(spec.dataset_root, spec.split)
    tap = FeatureTap(spec.backbone, spec.layers, weights=spec.weights)
    out = spec.output_root
    out.mkdir(parents=True, exist_ok=True)
    truth_dir = out / "truth"
    if spec.split == "test":
        truth_dir.mkdir(exist_ok=True)
    images = []
    shapes: dict[int, tuple[int, int, int]] = {}
    for entry in entries:
        feats = tap.extract(load_image(entry.path, spec.size))
        record = {
            "image_id": entry.image_id,
            # features were computed at the configured resolution, so that is
            # the resolution anomaly maps should come back at
            "source_size": [spec.size, spec.size],
            "original_size": list(entry.original_size),
            "label": entry.label,
            "layers": {},
        }
        for lid, feat in feats.items():
            if lid in shapes and shapes[lid] != feat.shape:
                raise RuntimeError(
                    f"layer {lid} shape drifted: {feat.shape} vs {shapes[lid]}"
                )
            shapes[lid] = feat.shape
            rel = f"{entry.image_id}_l{lid}.ftn"
            write_ftn(out / rel, feat)
            record["layers"][str(lid)] = rel
        if spec.split == "test":
            mask = load_mask(entry.mask_path, spec.size)
            rel = f"truth/{entry.image_id}.ftn"
            write_ftn(out / rel, mask)
            record["mask"] = rel
        images.append(record)
    manifest = {
        "version": MANIFEST_VERSION,
        "images": images,
        "extractor": {
            "backbone": tap.backbone_name,
            "weights": tap.weights_id,
            "layers": spec.layers,
            "input_size": spec.size,
            "layer_shapes": {str(k): list(v) for k, v in sorted(shapes.items())},
        },
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path
