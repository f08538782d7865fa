"""Rendering of evaluation curves to figure files.

One PNG per curve kind, written next to the metrics JSON/CSV output so a run
directory is self-contained.  Uses the Agg backend; nothing here ever opens
a window.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

_CURVE_STYLE = {
    "roc": ("False positive rate", "True positive rate", "ROC"),
    "pro": ("False positive rate", "Per-region overlap", "PRO"),
    "pr": ("Recall", "Precision", "Precision-Recall"),
    "iou": ("Score quantile", "Mean IoU", "IoU vs threshold"),
}


def write_curve_csv(path: str | Path, points: list[tuple[float, float]], kind: str) -> None:
    xlabel, ylabel, _ = _CURVE_STYLE[kind]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([xlabel.lower().replace(" ", "_"), ylabel.lower().replace(" ", "_")])
        writer.writerows((f"{x:.8f}", f"{y:.8f}") for x, y in points)


def render_curve(path: str | Path, points: list[tuple[float, float]], kind: str) -> None:
    xlabel, ylabel, title = _CURVE_STYLE[kind]
    fig, ax = plt.subplots(figsize=(4.5, 3.4), dpi=120)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    ax.plot(xs, ys, "-", lw=1.5)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.05)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_all(out_dir: str | Path, curves: dict[str, list[tuple[float, float]]]) -> list[Path]:
    """Write <kind>.csv and <kind>.png for every curve; returns file paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for kind, points in curves.items():
        csv_path = out / f"curve_{kind}.csv"
        png_path = out / f"curve_{kind}.png"
        write_curve_csv(csv_path, points, kind)
        render_curve(png_path, points, kind)
        written += [csv_path, png_path]
    return written
