"""Command-line interface.

Subcommands: build, compress (alias: pts), score, evaluate, update.
Exit codes: 0 ok, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, DataError
from .matching import set_parallel_workers
from .pipeline import (
    PRESETS,
    expand_config,
    load_run_config,
    run_build,
    run_compress,
    run_evaluate,
    run_score,
    run_update,
)
from .selection import SelectionConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anomatch",
        description="Template-bank anomaly detection: build, compress, score, evaluate, update.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="stack nominal feature tensors into a bank")
    p.add_argument("--manifest", required=True, help="input tensor manifest JSON")
    p.add_argument("--out", required=True, help="bank directory to create")

    for name in ("compress", "pts"):
        p = sub.add_parser(
            name,
            help="select K prototype sheets per pixel" if name == "compress" else argparse.SUPPRESS,
        )
        p.add_argument("--bank", required=True)
        p.add_argument("--k", required=True, type=int)
        p.add_argument("--min-samples", type=int, default=5)
        p.add_argument("--xi", type=float, default=0.05)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", required=True)

    p = sub.add_parser("score", help="score query tensors against a bank")
    p.add_argument("--bank", required=True)
    p.add_argument("--config", help="run-config JSON (preset or explicit)")
    p.add_argument("--preset", choices=sorted(PRESETS), help="preset shortcut if no config file")
    p.add_argument("--queries", required=True, help="query tensor manifest JSON")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("evaluate", help="compute AUROC/PRO metrics and curves")
    p.add_argument("--scores", required=True, help="directory produced by score")
    p.add_argument("--truth", required=True, help="directory of <image_id>.ftn binary masks")
    p.add_argument("--out", required=True, help="metrics JSON path")
    p.add_argument("--cap", type=float, default=0.3)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--no-figures", action="store_true", help="skip curve CSV/PNG rendering")

    p = sub.add_parser("update", help="hot-append nominal sheets to a bank")
    p.add_argument("--bank", required=True)
    p.add_argument("--add", required=True, help="manifest of new nominal images")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "build":
            bank = run_build(args.manifest, args.out)
            print(f"built bank: {bank.sheet_count} sheets, layers {bank.layer_ids}")
        elif args.command in ("compress", "pts"):
            cfg = SelectionConfig(k=args.k, min_samples=args.min_samples, xi=args.xi)
            tiny = run_compress(args.bank, args.out, cfg, workers=args.workers)
            print(f"compressed bank: {tiny.sheet_count} sheets, layers {tiny.layer_ids}")
        elif args.command == "score":
            if args.config:
                cfg = load_run_config(args.config)
            elif args.preset:
                cfg = expand_config({"preset": args.preset})
            else:
                raise ConfigError("score needs --config or --preset")
            if cfg.workers > 1:
                set_parallel_workers(cfg.workers)
            results = run_score(args.bank, cfg, args.queries, args.out)
            print(f"scored {len(results)} queries -> {args.out}")
        elif args.command == "evaluate":
            metrics = run_evaluate(
                args.scores,
                args.truth,
                args.out,
                cap=args.cap,
                steps=args.steps,
                render=not args.no_figures,
            )
            print(
                "auroc_image={auroc_image:.4f} auroc_pixel={auroc_pixel:.4f} "
                "pro={pro:.4f}".format(**metrics)
            )
        elif args.command == "update":
            bank = run_update(args.bank, args.add)
            print(f"bank now holds {bank.sheet_count} sheets")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
