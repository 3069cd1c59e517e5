"""Render report figures: accuracy metrics versus memory budget."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _series(report: dict, side: str, metric: str) -> tuple[list[int], list[float]]:
    xs, ys = [], []
    for run in report["runs"]:
        xs.append(run["memory_bytes"])
        ys.append(run["metrics"][side][metric])
    return xs, ys


def render_report_figures(report: dict, outdir, stem: str) -> list[str]:
    """One PNG per metric (ARE, AAE, and F1 for hitter modes), sketch vs
    baseline over the swept budgets. Returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    metrics = ["are", "aae"] + (["f1"] if report["mode"] in ("hh", "hhh") else [])
    written: list[str] = []

    for metric in metrics:
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for side, marker in (("sketch", "o"), ("baseline", "s")):
            xs, ys = _series(report, side, metric)
            ax.plot([x / 1024 for x in xs], ys, marker=marker, label=side)
        ax.set_xlabel("memory (KiB)")
        ax.set_ylabel(metric.upper())
        if metric in ("are", "aae") and all(y > 0 for y in _series(report, "baseline", metric)[1]):
            ax.set_yscale("log")
        ax.set_title(f"{metric.upper()} vs memory ({report['mode']} mode)")
        ax.legend()
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = outdir / f"{stem}_{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(str(path))
    return written
