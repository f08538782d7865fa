"""Command line: extract dataset features into FTN tensors + manifest."""

from __future__ import annotations

import argparse
import sys

from .extract import ExtractSpec, run_extract


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ftnextract",
        description="Export frozen-backbone features as FTN tensors with a manifest.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="extract one dataset split")
    p.add_argument("--dataset", required=True, help="dataset root folder")
    p.add_argument("--split", choices=("train", "test"), default="train")
    p.add_argument("--layers", default="1,2,3", help="comma-separated stage ids, e.g. 1,2,3")
    p.add_argument("--size", type=int, default=256, help="square input resolution")
    p.add_argument("--backbone", default="wide_resnet101_2")
    p.add_argument(
        "--weights",
        default="download",
        help="'download' (pretrained), 'random', or a local state-dict path",
    )
    p.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)

    try:
        spec = ExtractSpec(
            dataset_root=args.dataset,
            output_root=args.out,
            split=args.split,
            layers=[int(x) for x in args.layers.split(",") if x],
            size=args.size,
            backbone=args.backbone,
            weights=args.weights,
        )
        manifest = run_extract(spec)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
