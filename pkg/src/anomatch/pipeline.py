"""Two-stage orchestration: bank building, compression, scoring, evaluation,
hot update.  This is the layer the CLI drives; everything here is also usable
as a library.

Image manifests are UTF-8 JSON listing, per image: an id, the original image
resolution (used as the default output resolution for anomaly maps), one FTN
tensor per extracted layer, and optionally a binary ground-truth mask tensor.
Paths are resolved relative to the manifest file.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import report
from .bank import TemplateBank, append_sheets, build_bank, load_bank, save_bank
from .errors import ConfigError, DataError
from .matching import (
    MatchConfig,
    PatchSpec,
    aggregate_layers,
    blend_maps,
    backward_map,
    count_zero_vectors,
    forward_map,
)
from .metrics import auroc, curve_points, pro
from .postproc import PostConfig, image_score, normalize01
from .selection import SelectionConfig, compress_bank
from .tensors import FeatureMap, read_map, read_tensor, write_map

MANIFEST_VERSION = 1

PRESETS: dict[str, dict] = {
    "mvtec_ad": {"layers": [1, 2, 3], "patches": [9, 7, 5], "alpha": 0.8},
    "mtd": {"layers": [1, 2], "patches": [3, 3], "alpha": 0.8},
    "mstc": {"layers": [2, 3], "patches": [9, 5], "alpha": 0.8},
    "mvtec_loco": {"layers": [2, 3, 4], "patches": [11, 9, 7], "alpha": 0.6},
}


@dataclass
class ImageEntry:
    image_id: str
    source_size: tuple[int, int]
    layer_paths: dict[int, Path]
    mask_path: Path | None = None


@dataclass
class RunConfig:
    """Fully expanded scoring configuration."""

    match: MatchConfig
    post: PostConfig = field(default_factory=PostConfig)
    preset: str = "custom"
    workers: int = 1

    def describe(self) -> dict:
        return {
            "preset": self.preset,
            "layers": list(self.match.layer_ids),
            "patches": [
                [self.match.patches[lid].m, self.match.patches[lid].n]
                for lid in self.match.layer_ids
            ],
            "alpha": self.match.alpha,
            "output_resolution": (
                list(self.match.output_resolution)
                if self.match.output_resolution is not None
                else None
            ),
            "sigma": self.post.sigma,
            "truncate": self.post.truncate,
            "workers": self.workers,
        }


def load_run_config(path: str | Path) -> RunConfig:
    """Read a run-config JSON file and expand its preset."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return expand_config(raw)


def expand_config(raw: dict) -> RunConfig:
    preset = raw.get("preset", "custom")
    if preset != "custom":
        if preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset!r}; choose from {sorted(PRESETS)} or 'custom'"
            )
        base = dict(PRESETS[preset])
    else:
        base = {}
    layers = raw.get("layers", base.get("layers"))
    patches = raw.get("patches", base.get("patches"))
    alpha = raw.get("alpha", base.get("alpha", 0.8))
    if layers is None or patches is None:
        raise ConfigError("config must provide layers and patches (or a preset)")
    if len(layers) != len(patches):
        raise ConfigError(f"{len(layers)} layers but {len(patches)} patch sizes")
    patch_specs = {}
    for lid, p in zip(layers, patches):
        if isinstance(p, (list, tuple)):
            m, n = int(p[0]), int(p[1])
        else:
            m = n = int(p)
        patch_specs[int(lid)] = PatchSpec(m, n)
    out_res = raw.get("output_resolution")
    match = MatchConfig(
        layer_ids=tuple(int(l) for l in layers),
        patches=patch_specs,
        alpha=float(alpha),
        output_resolution=tuple(out_res) if out_res else None,
    )
    post = PostConfig(
        sigma=float(raw.get("sigma", 6.8)), truncate=float(raw.get("truncate", 4.0))
    )
    workers = int(raw.get("workers", 1))
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    return RunConfig(match=match, post=post, preset=preset, workers=workers)


def load_image_manifest(path: str | Path) -> list[ImageEntry]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest {path} is not valid JSON: {exc}") from exc
    if raw.get("version") != MANIFEST_VERSION:
        raise DataError(f"{path}: unsupported manifest version {raw.get('version')}")
    base = path.parent
    entries = []
    for item in raw.get("images", []):
        size = item.get("source_size")
        if not size or len(size) != 2:
            raise DataError(f"{path}: image {item.get('image_id')} missing source_size")
        mask = item.get("mask")
        entries.append(
            ImageEntry(
                image_id=str(item["image_id"]),
                source_size=(int(size[0]), int(size[1])),
                layer_paths={int(k): base / v for k, v in item["layers"].items()},
                mask_path=(base / mask) if mask else None,
            )
        )
    if not entries:
        raise DataError(f"{path}: manifest lists no images")
    return entries


def write_image_manifest(path: str | Path, entries: list[dict]) -> None:
    payload = {"version": MANIFEST_VERSION, "images": entries}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _load_entry_layers(entry: ImageEntry, layer_ids=None) -> dict[int, FeatureMap]:
    maps = {}
    for lid, p in sorted(entry.layer_paths.items()):
        if layer_ids is not None and lid not in layer_ids:
            continue
        if not p.is_file():
            raise DataError(f"image {entry.image_id}: missing tensor file {p}")
        maps[lid] = read_tensor(p, layer_id=lid)
    return maps


class RunLog:
    """Machine-readable JSON-lines run log."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8")

    def write(self, event: str, **fields) -> None:
        rec = {"event": event, **fields}
        self._fh.write(json.dumps(rec, sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def run_build(manifest_path: str | Path, out_dir: str | Path) -> TemplateBank:
    """Stage one: stack all manifest images into an original bank on disk."""
    entries = load_image_manifest(manifest_path)
    images = [_load_entry_layers(e) for e in entries]
    bank = build_bank(images, sources=[e.image_id for e in entries])
    save_bank(bank, out_dir)
    return bank


def run_compress(
    bank_dir: str | Path, out_dir: str | Path, cfg: SelectionConfig, workers: int = 1
) -> TemplateBank:
    bank = load_bank(bank_dir)
    tiny = compress_bank(bank, cfg, workers=workers)
    save_bank(tiny, out_dir)
    return tiny


def run_score(
    bank_dir: str | Path,
    cfg: RunConfig,
    queries_path: str | Path,
    out_dir: str | Path,
) -> list[tuple[str, float]]:
    """Stage two: per query, per-layer mutual matching, aggregation at the
    query's native resolution, detection score and normalised map on disk."""
    bank = load_bank(bank_dir)
    cfg.match.validate_against(bank.layer_ids)
    entries = load_image_manifest(queries_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log = RunLog(out / "run_log.jsonl")
    results: list[tuple[str, float]] = []
    try:
        log.write("config_expanded", config=cfg.describe())
        log.write(
            "bank_diagnostics",
            sheets=bank.sheet_count,
            zero_vectors={
                str(lid): count_zero_vectors(bank.layers[lid]) for lid in cfg.match.layer_ids
            },
        )
        for entry in entries:
            missing = [lid for lid in cfg.match.layer_ids if lid not in entry.layer_paths]
            if missing:
                raise DataError(f"query {entry.image_id}: missing layers {missing}")
            maps = []
            layer_log = {}
            for lid in cfg.match.layer_ids:
                q = _load_entry_layers(entry, layer_ids={lid})[lid]
                if q.shape != bank.layer_shape(lid):
                    raise DataError(
                        f"query {entry.image_id} layer {lid}: shape {q.shape} "
                        f"!= bank {bank.layer_shape(lid)}"
                    )
                t0 = time.perf_counter()
                patch = cfg.match.patches[lid]
                fwd = forward_map(q, bank.layers[lid], patch)
                bwd = backward_map(q, bank.layers[lid], patch)
                maps.append(blend_maps(fwd, bwd, cfg.match.alpha))
                layer_log[str(lid)] = {
                    "seconds": round(time.perf_counter() - t0, 6),
                    "zero_vectors_query": count_zero_vectors(q),
                }
            resolution = cfg.match.output_resolution or entry.source_size
            combined = aggregate_layers(maps, resolution)
            score = image_score(combined, cfg.post)
            # the normalised map is the per-image localization deliverable;
            # the raw map keeps scores comparable across images, which the
            # pooled pixel metrics need
            write_map(out / f"{entry.image_id}_map.ftn", normalize01(combined))
            write_map(out / f"{entry.image_id}_raw.ftn", combined)
            results.append((entry.image_id, score))
            log.write("image_scored", image_id=entry.image_id, score=score, layers=layer_log)
    finally:
        log.close()
    with open(out / "scores.csv", "w", encoding="utf-8") as fh:
        fh.write("image_id,score\n")
        for image_id, score in results:
            fh.write(f"{image_id},{score!r}\n")
    return results


def run_update(bank_dir: str | Path, manifest_path: str | Path) -> TemplateBank:
    """Hot update: append the manifest's images to the bank as new sheets."""
    entries = load_image_manifest(manifest_path)
    images = [_load_entry_layers(e) for e in entries]
    return append_sheets(bank_dir, images, sources=[e.image_id for e in entries])


def read_scores_csv(path: str | Path) -> list[tuple[str, float]]:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    out = []
    for line in lines[1:]:
        image_id, score = line.rsplit(",", 1)
        out.append((image_id, float(score)))
    return out


def run_evaluate(
    scores_dir: str | Path,
    truth_dir: str | Path,
    out_path: str | Path,
    cap: float = 0.3,
    steps: int = 500,
    render: bool = True,
) -> dict:
    """Join predicted maps/scores with ground-truth masks and emit metrics
    JSON, curve CSVs and curve figures."""
    scores_dir = Path(scores_dir)
    truth_dir = Path(truth_dir)
    csv_path = scores_dir / "scores.csv"
    if not csv_path.is_file():
        raise DataError(f"missing {csv_path}")
    image_scores = read_scores_csv(csv_path)
    maps, masks, labels, det_scores = [], [], [], []
    for image_id, score in image_scores:
        # prefer the raw (cross-image comparable) map; fall back to the
        # normalised localization map for directories that lack raw dumps
        map_path = scores_dir / f"{image_id}_raw.ftn"
        if not map_path.is_file():
            map_path = scores_dir / f"{image_id}_map.ftn"
        mask_path = truth_dir / f"{image_id}.ftn"
        if not map_path.is_file():
            raise DataError(f"missing anomaly map {map_path}")
        if not mask_path.is_file():
            raise DataError(f"missing ground-truth mask {mask_path}")
        amap = read_map(map_path)
        mask = read_map(mask_path)
        if amap.shape != mask.shape:
            raise DataError(
                f"{image_id}: map shape {amap.shape} != mask shape {mask.shape}"
            )
        maps.append(amap)
        masks.append(mask)
        labels.append(bool((mask != 0).any()))
        det_scores.append(score)
    auroc_image = auroc(det_scores, labels)
    pixel_scores = np.concatenate([m.reshape(-1) for m in maps])
    pixel_labels = np.concatenate([(g != 0).reshape(-1) for g in masks])
    auroc_pixel = auroc(pixel_scores, pixel_labels)
    curve, integral = pro(maps, masks, cap=cap, steps=steps)
    curves = {
        kind: curve_points(maps, masks, kind, steps=steps)
        for kind in ("roc", "pro", "iou", "pr")
    }
    metrics = {
        "auroc_image": auroc_image,
        "auroc_pixel": auroc_pixel,
        "pro": integral,
        "pro_cap": cap,
        "pro_degenerate": curve.degenerate,
        "images": len(maps),
        "curves": {k: [[float(x), float(y)] for x, y in v] for k, v in curves.items()},
    }
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if render:
        report.render_all(out_path.parent, curves)
    return metrics
