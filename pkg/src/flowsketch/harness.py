"""Experiment orchestration: ground truth, baseline comparison, reports.

A run sweeps memory budgets over one trace. For each budget it builds the
exact per-flow ground truth (a plain hash table, independent of any sketch
code), runs a plain CMS baseline and the two-tier sketch on the identical
stream, and emits one JSON report plus a delimited metrics summary. Reports
are reproducible: the same spec and seed give byte-identical output apart
from the generated_at stamp.
"""

from __future__ import annotations

import csv
import datetime
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import MetricReport, compute_metrics
from .classifier import NoisyOracle, OracleBackend, PredictionFileBackend, RemoteBackend, StaticBackend
from .cms import CountMinSketch
from .slots import Hierarchy, hhh_from_table
from .model import ConfigError, FlowKey, PacketRecord, SketchConfig, derive_seed, memory_budget_split
from .sketch import TieredSketch
from .traces import ZipfParams, generate_zipf, read_trace

SCHEMA_VERSION = 1

BACKENDS = ("oracle", "noisy", "static", "file", "remote")


@dataclass
class ExperimentSpec:
    budgets: list[int]
    mode: str = "size"
    trace_path: str | None = None
    records: list[PacketRecord] | None = None
    zipf: ZipfParams | None = None
    backend: str = "oracle"
    accuracy: float = 1.0            # NoisyOracle dial
    static_score: float = 0.0
    predictions_path: str | None = None
    remote_address: str | None = None
    seed: int = 1
    config: SketchConfig = field(default_factory=SketchConfig)
    heavy_ratio: float | None = None  # None -> 0.20, or 1.0 in hh mode
    hierarchy: Hierarchy = field(default_factory=Hierarchy)
    top_k: int = 20
    baseline_counter_bits: int = 32

    def validate(self) -> None:
        if not self.budgets:
            raise ConfigError("at least one memory budget is required")
        if self.mode not in ("size", "hh", "hhh"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r} (choices: {', '.join(BACKENDS)})")
        if self.backend == "file" and not self.predictions_path:
            raise ConfigError("file backend needs a predictions path")
        if self.backend == "remote" and not self.remote_address:
            raise ConfigError("remote backend needs an address")
        sources = sum(x is not None for x in (self.trace_path, self.records, self.zipf))
        if sources != 1:
            raise ConfigError("exactly one of trace_path, records, zipf must be given")


def exact_counts(records: list[PacketRecord]) -> dict[FlowKey, int]:
    """Ground-truth flow sizes via a plain hash table."""
    return dict(Counter(rec.key for rec in records))


def build_backend(spec: ExperimentSpec, truth: dict[FlowKey, int], cfg: SketchConfig):
    if spec.backend == "oracle":
        return OracleBackend(truth, cfg.threshold_T, cfg.scale_a)
    if spec.backend == "noisy":
        base = OracleBackend(truth, cfg.threshold_T, cfg.scale_a)
        return NoisyOracle(base, spec.accuracy, seed=derive_seed(spec.seed, 17))
    if spec.backend == "static":
        return StaticBackend(spec.static_score)
    if spec.backend == "file":
        return PredictionFileBackend(spec.predictions_path)
    if spec.backend == "remote":
        return RemoteBackend(spec.remote_address)
    raise ConfigError(f"unknown backend {spec.backend!r}")


def load_records(spec: ExperimentSpec) -> list[PacketRecord]:
    if spec.records is not None:
        return spec.records
    if spec.trace_path is not None:
        return read_trace(spec.trace_path)
    return generate_zipf(spec.zipf)


def run_baseline_cms(records, budget: int, cfg: SketchConfig, seed: int,
                     counter_bits: int = 32) -> CountMinSketch:
    """Textbook CMS at the full budget: overflow-safe 32-bit counters by
    default (the narrow-counter trick is the tiered sketch's own memory
    optimization, not the baseline's)."""
    counter_bytes = counter_bits // 8
    width = budget // (cfg.d_light * counter_bytes)
    if width < 1:
        raise ConfigError(f"budget {budget} B cannot hold one baseline counter row")
    cms = CountMinSketch(width, cfg.d_light, counter_bits, seed=seed)
    for rec in records:
        cms.insert(rec.key, 1)
    return cms


def _hhh_metrics(truth_rows, reported_rows) -> MetricReport:
    truth_map = {(p, l): c for p, l, c in truth_rows}
    reported_map = {(p, l): c for p, l, c in reported_rows}
    if not truth_map:
        return MetricReport(0.0, 0.0, 1.0 if not reported_map else 0.0,
                            1.0, 0.0 if reported_map else 1.0)
    return compute_metrics(truth_map, reported_map,
                           hh_truth=truth_map.keys(), hh_reported=reported_map.keys(),
                           restrict_to_hh=True)


def run_experiment(spec: ExperimentSpec) -> dict:
    spec.validate()
    records = load_records(spec)
    if not records:
        raise ConfigError("trace is empty")
    truth = exact_counts(records)
    packets = len(records)

    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "mode": spec.mode,
        "seed": spec.seed,
        "backend": {"name": spec.backend, "accuracy": spec.accuracy},
        "trace": {
            "path": spec.trace_path,
            "generator": None if spec.zipf is None else {
                "num_flows": spec.zipf.num_flows, "num_packets": spec.zipf.num_packets,
                "alpha": spec.zipf.alpha, "seed": spec.zipf.seed,
            },
            "packets": packets,
            "flows": len(truth),
        },
        "runs": [],
    }

    for budget in spec.budgets:
        cfg = spec.config.copy()
        cfg.seed = spec.seed
        if spec.heavy_ratio is not None:
            cfg.heavy_ratio = spec.heavy_ratio
        elif spec.mode == "hh":
            cfg.heavy_ratio = 1.0
        heavy_bytes, light_bytes = memory_budget_split(budget, cfg, spec.mode)

        backend = build_backend(spec, truth, cfg)
        sketch = TieredSketch(cfg, backend, spec.mode)
        for rec in records:
            sketch.insert(rec)

        baseline = run_baseline_cms(records, budget, cfg, seed=derive_seed(spec.seed, 23),
                                    counter_bits=spec.baseline_counter_bits)
        baseline_est = {k: baseline.query(k) for k in truth}

        run: dict = {
            **sketch.report_dict(spec.top_k),
            "memory_bytes": budget,
            "allocated_bytes": sketch.memory_bytes(),
            "heavy_bytes": heavy_bytes,
            "light_bytes": light_bytes,
        }

        if spec.mode == "size":
            sketch_est = {k: sketch.query_size(k) for k in truth}
            run["metrics"] = {
                "sketch": compute_metrics(truth, sketch_est).as_dict(),
                "baseline": compute_metrics(truth, baseline_est).as_dict(),
            }
        elif spec.mode == "hh":
            thr = sketch.hh_threshold()
            hh_truth = {k for k, n in truth.items() if n > thr}
            reported = sketch.query_heavy_hitters(thr)
            sketch_est = {k: sketch.query_size(k) for k in hh_truth}
            baseline_hh = {k for k, est in baseline_est.items() if est > thr}
            run["hh_threshold"] = thr
            run["metrics"] = {
                "sketch": compute_metrics(truth, sketch_est, hh_truth, {k for k, _ in reported},
                                          restrict_to_hh=True).as_dict(),
                "baseline": compute_metrics(truth, baseline_est, hh_truth, baseline_hh,
                                            restrict_to_hh=True).as_dict(),
            }
            run["reported_hh"] = [{"key_hex": k.hex(), "size": n} for k, n in reported]
        else:  # hhh
            thr = sketch.hh_threshold()
            truth_rows = hhh_from_table(truth, spec.hierarchy, thr)
            reported_rows = sketch.query_hhh(spec.hierarchy, thr)
            base_table: dict[FlowKey, int] = baseline_est
            baseline_rows = hhh_from_table(base_table, spec.hierarchy, thr)
            run["hh_threshold"] = thr
            run["metrics"] = {
                "sketch": _hhh_metrics(truth_rows, reported_rows).as_dict(),
                "baseline": _hhh_metrics(truth_rows, baseline_rows).as_dict(),
            }
            run["hhh"] = [{"prefix": p, "level": l, "count": c} for p, l, c in reported_rows]

        report["runs"].append(run)
    return report


def report_json_bytes(report: dict) -> bytes:
    return json.dumps(report, indent=2).encode() + b"\n"


def write_report(report: dict, out_path: str, plot: bool = False) -> list[str]:
    """Write the JSON report, the delimited metrics summary, per-mode CSV
    extras, and (optionally) figures. Returns the paths written."""
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    written = [str(out)]
    out.write_bytes(report_json_bytes(report))

    metrics_path = out.with_suffix(".metrics.csv")
    with open(metrics_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["memory_bytes", "mode",
                         "sketch_are", "sketch_aae", "sketch_f1",
                         "baseline_are", "baseline_aae", "baseline_f1"])
        for run in report["runs"]:
            m = run["metrics"]
            writer.writerow([
                run["memory_bytes"], report["mode"],
                f"{m['sketch']['are']:.6g}", f"{m['sketch']['aae']:.6g}", f"{m['sketch']['f1']:.6g}",
                f"{m['baseline']['are']:.6g}", f"{m['baseline']['aae']:.6g}", f"{m['baseline']['f1']:.6g}",
            ])
    written.append(str(metrics_path))

    if report["mode"] == "hhh":
        hhh_path = out.with_suffix(".hhh.csv")
        with open(hhh_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["prefix_cidr", "level", "count"])
            for run in report["runs"]:
                for row in run.get("hhh", []):
                    writer.writerow([row["prefix"], row["level"], row["count"]])
        written.append(str(hhh_path))

    if plot:
        from .figures import render_report_figures

        written.extend(render_report_figures(report, out.parent, out.stem))
    return written
