"""Template-bank anomaly detection.

Build pixel-level template banks from nominal feature tensors, compress them
with density-aware prototype selection, score queries by bidirectional
patch-constrained cosine matching, and evaluate with AUROC/PRO.
"""

from .bank import TemplateBank, append_sheets, build_bank, load_bank, save_bank
from .errors import (
    AnomatchError,
    BankLockError,
    ConfigError,
    DataError,
    TensorFormatError,
)
from .matching import (
    MatchConfig,
    PatchSpec,
    aggregate_layers,
    backward_map,
    bilinear_resize,
    blend_maps,
    cosine_distance,
    forward_map,
    mutual_map,
    patch_indices,
    set_parallel_workers,
)
from .metrics import EvalRecord, ProCurve, auroc, connected_components, curve_points, pro
from .postproc import PostConfig, gaussian_blur, image_score, normalize01
from .selection import (
    PixelPrototypeSet,
    SelectionConfig,
    compress_bank,
    global_centre,
    optics_regions,
    region_centre,
    select_hard,
    select_pixel_prototypes,
)
from .tensors import FeatureMap, read_map, read_tensor, write_map, write_tensor

__version__ = "0.1.0"

__all__ = [
    "AnomatchError",
    "BankLockError",
    "ConfigError",
    "DataError",
    "EvalRecord",
    "FeatureMap",
    "MatchConfig",
    "PatchSpec",
    "PixelPrototypeSet",
    "PostConfig",
    "ProCurve",
    "SelectionConfig",
    "TemplateBank",
    "TensorFormatError",
    "aggregate_layers",
    "append_sheets",
    "auroc",
    "backward_map",
    "bilinear_resize",
    "blend_maps",
    "build_bank",
    "compress_bank",
    "connected_components",
    "cosine_distance",
    "curve_points",
    "forward_map",
    "gaussian_blur",
    "global_centre",
    "image_score",
    "load_bank",
    "mutual_map",
    "normalize01",
    "optics_regions",
    "patch_indices",
    "pro",
    "read_map",
    "read_tensor",
    "region_centre",
    "save_bank",
    "select_hard",
    "select_pixel_prototypes",
    "set_parallel_workers",
    "write_map",
    "write_tensor",
]
