"""Command-line interface.

Subcommands:
  generate  synthesize a skewed trace CSV
  ingest    convert a binary packet dump to the trace CSV format
  run       sweep memory budgets over a trace and write the report
  analyze   evaluate the closed-form accuracy/error expressions
  mc        Monte Carlo verifiers (lock-flag mean, slot-replacement bias)
  plot      render figures from an existing report

Exit codes: 0 success, 2 configuration error, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .analysis import AnalysisInputs, cms_full_accuracy_prob, lock_flag_mc, overcount_bound, tiered_full_accuracy_prob
from .harness import ExperimentSpec, run_experiment, write_report
from .model import ConfigError, InputError, SketchConfig
from .traces import ZipfParams, generate_zipf, ingest_packet_dump, write_trace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3


def _parse_memory(text: str) -> int:
    t = text.strip().upper()
    for suffix, mult in (("KB", 1024), ("MB", 1024 * 1024), ("B", 1)):
        if t.endswith(suffix):
            return int(float(t[: -len(suffix)]) * mult)
    return int(t)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bucket-size", type=int, default=8, help="cells per heavy bucket")
    p.add_argument("--light-rows", type=int, default=3, help="hash rows in the light part")
    p.add_argument("--light-counter-bits", type=int, default=8, choices=(8, 16, 32))
    p.add_argument("--heavy-ratio", type=float, default=None,
                   help="fraction of memory for the heavy part (default 0.20; 1.0 in hh mode)")
    p.add_argument("--threshold-T", type=int, default=64, dest="threshold_t")
    p.add_argument("--scale-a", type=float, default=2.298)
    p.add_argument("--hh-fraction", type=float, default=0.0001,
                   help="heavy-hitter threshold as a fraction of total packets")
    p.add_argument("--fingerprint-bits", type=int, default=0, choices=(0, 16, 32))
    p.add_argument("--classify-resident", action="store_true",
                   help="also reclassify resident flows on every packet")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowsketch", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a skewed trace")
    g.add_argument("--num-flows", type=int, required=True)
    g.add_argument("--num-packets", type=int, required=True)
    g.add_argument("--zipf-alpha", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--no-headers", action="store_true", help="emit empty header_hex columns")
    g.add_argument("--out", required=True)

    i = sub.add_parser("ingest", help="convert a binary packet dump to trace CSV")
    i.add_argument("dump")
    i.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run a budget sweep and write the report")
    r.add_argument("--trace", required=True)
    r.add_argument("--memory", required=True,
                   help="comma-separated budgets, e.g. '50KB,100KB,200KB'")
    r.add_argument("--mode", choices=("size", "hh", "hhh"), default="size")
    r.add_argument("--backend", choices=("oracle", "noisy", "static", "file", "remote"), default="oracle")
    r.add_argument("--accuracy-A", type=float, default=1.0, dest="accuracy",
                   help="large-flow accuracy dial for the noisy backend")
    r.add_argument("--static-score", type=float, default=0.0)
    r.add_argument("--predictions", help="prediction CSV for the file backend")
    r.add_argument("--remote", help="host:port of a remote scorer")
    r.add_argument("--seed", type=int, default=1)
    r.add_argument("--top-k", type=int, default=20)
    r.add_argument("--baseline-counter-bits", type=int, default=32, choices=(8, 16, 32),
                   help="counter width of the plain-CMS baseline")
    r.add_argument("--out", required=True)
    r.add_argument("--plot", action="store_true", help="render figures next to the report")
    _add_config_flags(r)

    a = sub.add_parser("analyze", help="evaluate the closed-form expressions")
    a.add_argument("--accuracy-A", type=float, required=True, dest="accuracy")
    a.add_argument("--w-light", type=int, required=True)
    a.add_argument("--d-light", type=int, required=True)
    a.add_argument("--n-light", type=int, required=True)
    a.add_argument("--n-large", type=int, default=0)
    a.add_argument("--total-packets", type=int, default=0)
    a.add_argument("--threshold-T", type=int, default=64, dest="threshold_t")

    m = sub.add_parser("mc", help="Monte Carlo verifiers")
    m.add_argument("--kind", choices=("lock", "slot"), default="lock")
    m.add_argument("--labels", default="1,1,0,1", help="comma-separated 0/1 labels (lock kind)")
    m.add_argument("--trials", type=int, default=100_000)
    m.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("plot", help="render figures from an existing report")
    p.add_argument("report")
    p.add_argument("--outdir", default=None)

    return parser


def _cmd_generate(args) -> int:
    params = ZipfParams(args.num_flows, args.num_packets, args.zipf_alpha, args.seed,
                        include_headers=not args.no_headers)
    write_trace(args.out, generate_zipf(params))
    print(f"wrote {args.num_packets} packets / {args.num_flows} flows to {args.out}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    records, skipped = ingest_packet_dump(args.dump)
    write_trace(args.out, records)
    print(f"wrote {len(records)} packets to {args.out} ({skipped} non-IP records skipped)")
    return EXIT_OK


def _make_config(args) -> SketchConfig:
    return SketchConfig(
        d_h=args.bucket_size,
        d_light=args.light_rows,
        light_counter_bits=args.light_counter_bits,
        threshold_T=args.threshold_t,
        scale_a=args.scale_a,
        hh_threshold_fraction=args.hh_fraction,
        fingerprint_bits=args.fingerprint_bits,
        classify_resident=args.classify_resident,
    )


def _cmd_run(args) -> int:
    budgets = [_parse_memory(b) for b in args.memory.split(",") if b.strip()]
    spec = ExperimentSpec(
        budgets=budgets,
        mode=args.mode,
        trace_path=args.trace,
        backend=args.backend,
        accuracy=args.accuracy,
        static_score=args.static_score,
        predictions_path=args.predictions,
        remote_address=args.remote,
        seed=args.seed,
        config=_make_config(args),
        heavy_ratio=args.heavy_ratio,
        top_k=args.top_k,
        baseline_counter_bits=args.baseline_counter_bits,
    )
    report = run_experiment(spec)
    written = write_report(report, args.out, plot=args.plot)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    inputs = AnalysisInputs(args.accuracy, args.w_light, args.d_light, args.n_light,
                            args.n_large, args.total_packets, args.threshold_t)
    bound = overcount_bound(inputs)
    out = {
        "cms_full_accuracy_prob": cms_full_accuracy_prob(args.w_light, args.d_light, max(args.n_light, 1)),
        "tiered_full_accuracy_prob": tiered_full_accuracy_prob(inputs),
        "epsilon": bound.epsilon,
        "delta": bound.delta,
        "light_mass_bound": bound.light_mass_bound,
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _cmd_mc(args) -> int:
    if args.kind == "lock":
        labels = [int(x) for x in args.labels.split(",") if x.strip()]
        mean = lock_flag_mc(labels, args.trials, args.seed)
        expected = sum(labels) / len(labels) if labels else 0.0
        out = {"kind": "lock", "labels": labels, "trials": args.trials,
               "mc_mean": mean, "expected_mean": expected, "abs_error": abs(mean - expected)}
    else:
        import random

        from .slots import SlotSketch
        from .model import FlowKey

        rng = random.Random(args.seed)
        k1, k2 = FlowKey(data=b"\x01" * 13), FlowKey(data=b"\x02" * 13)
        held = 0
        for t in range(args.trials):
            c = SlotSketch(1, 1, seed=0, rng_seed=rng.getrandbits(32))
            for _ in range(6):
                c.insert(k1)
            for _ in range(4):
                c.insert(k2)
            held += c.query(k1)
        out = {"kind": "slot", "trials": args.trials, "mc_mean": held / args.trials,
               "expected_mean": 6.0, "abs_error": abs(held / args.trials - 6.0)}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _cmd_plot(args) -> int:
    from pathlib import Path

    from .figures import render_report_figures

    path = Path(args.report)
    try:
        report = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"cannot read report {args.report!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.report}: not valid JSON: {exc}") from exc
    outdir = Path(args.outdir) if args.outdir else path.parent
    for p in render_report_figures(report, outdir, path.stem):
        print(f"wrote {p}")
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "ingest": _cmd_ingest,
    "run": _cmd_run,
    "analyze": _cmd_analyze,
    "mc": _cmd_mc,
    "plot": _cmd_plot,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
