"""Frozen torchvision backbones with residual-stage feature taps.

Features are taken at the output of each residual stage (layer1..layer4),
after the stage's final activation, in inference mode with no augmentation:
the same image always produces bit-identical features.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import torch
from torchvision import models

STAGE_NAMES = {1: "layer1", 2: "layer2", 3: "layer3", 4: "layer4"}

BACKBONES = {
    "wide_resnet101_2": models.wide_resnet101_2,
    "wide_resnet50_2": models.wide_resnet50_2,
    "resnet101": models.resnet101,
    "resnet50": models.resnet50,
    "resnet18": models.resnet18,
}

# ImageNet statistics, the convention the pretrained weights expect
_MEAN = torch.tensor([0.485, 0.456, 0.406]).view(3, 1, 1)
_STD = torch.tensor([0.229, 0.224, 0.225]).view(3, 1, 1)


class FeatureTap:
    """A frozen backbone that returns {layer_id: (H, W, C) float32} features."""

    def __init__(self, backbone: str, layers: list[int], weights: str = "download"):
        if backbone not in BACKBONES:
            raise ValueError(f"unknown backbone {backbone!r}; choose from {sorted(BACKBONES)}")
        bad = [l for l in layers if l not in STAGE_NAMES]
        if bad:
            raise ValueError(f"layers must be within {sorted(STAGE_NAMES)}, got {bad}")
        self.backbone_name = backbone
        self.layers = sorted(layers)
        self.weights_id = self._resolve_weights(weights)
        self.model.eval()
        for p in self.model.parameters():
            p.requires_grad_(False)
        self._outputs: dict[int, torch.Tensor] = {}
        last = self.layers[-1]
        for lid in self.layers:
            getattr(self.model, STAGE_NAMES[lid]).register_forward_hook(
                self._hook(lid, stop=lid == last)
            )

    def _resolve_weights(self, weights: str) -> str:
        ctor = BACKBONES[self.backbone_name]
        if weights == "download":
            try:
                self.model = ctor(weights="IMAGENET1K_V1")
            except Exception as exc:
                raise RuntimeError(
                    f"could not obtain pretrained weights for {self.backbone_name}: {exc}; "
                    "pass --weights PATH to use a local state dict, or --weights random"
                ) from exc
            return f"{self.backbone_name}:IMAGENET1K_V1"
        if weights == "random":
            torch.manual_seed(0)
            self.model = ctor(weights=None)
            return f"{self.backbone_name}:random-seed-0"
        path = Path(weights)
        if not path.is_file():
            raise RuntimeError(f"weights file not found: {path}")
        self.model = ctor(weights=None)
        state = torch.load(path, map_location="cpu", weights_only=True)
        self.model.load_state_dict(state)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        return f"{self.backbone_name}:sha256:{digest}"

    def _hook(self, lid: int, stop: bool):
        def fn(_module, _inputs, output):
            self._outputs[lid] = output
            if stop:
                raise _DeepestTapReached()

        return fn

    def extract(self, image: np.ndarray) -> dict[int, np.ndarray]:
        """image: (H, W, 3) float32 in [0, 1], already resized."""
        x = torch.from_numpy(np.ascontiguousarray(image.transpose(2, 0, 1)))
        x = ((x - _MEAN) / _STD).unsqueeze(0)
        self._outputs.clear()
        with torch.no_grad():
            try:
                self.model(x)
            except _DeepestTapReached:
                pass  # stages beyond the deepest tap are never needed
        return {
            lid: self._outputs[lid][0].permute(1, 2, 0).contiguous().numpy().astype(np.float32)
            for lid in self.layers
        }


class _DeepestTapReached(Exception):
    pass
