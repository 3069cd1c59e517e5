"""Per-flow prediction export: the CSV the measurement library loads."""

from __future__ import annotations

import csv

import torch

from .dataset import TraceRow, build_dataset
from .models import score_batch


def predict_per_flow(model, rows: list[TraceRow], threshold: int = 64, scale: float = 2.298) -> dict[str, float]:
    """Mean model score over each flow's packets, clamped to [0, 1]."""
    dataset = build_dataset(rows, threshold, scale)
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    examples = dataset.examples
    for start in range(0, len(examples), 512):
        chunk = examples[start : start + 512]
        scores = score_batch(model, [ex.tokens for ex in chunk])
        for ex, score in zip(chunk, scores.tolist()):
            sums[ex.key_hex] = sums.get(ex.key_hex, 0.0) + score
            counts[ex.key_hex] = counts.get(ex.key_hex, 0) + 1
    return {k: min(1.0, max(0.0, sums[k] / counts[k])) for k in sums}


def export_predictions(model, rows: list[TraceRow], out_path: str,
                       threshold: int = 64, scale: float = 2.298) -> int:
    scores = predict_per_flow(model, rows, threshold, scale)
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["flow_key_hex", "score"])
        for key_hex in sorted(scores):
            writer.writerow([key_hex, f"{scores[key_hex]:.9f}"])
    return len(scores)
