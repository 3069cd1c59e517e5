"""flowtrainer CLI: train, export predictions, serve scores."""

from __future__ import annotations

import argparse
import sys

from .dataset import build_dataset, read_trace
from .models import load_model, save_model
from .train import TrainerConfig, TrainingError, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowtrainer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a classifier on a trace CSV")
    t.add_argument("--trace", required=True)
    t.add_argument("--model", choices=("transformer", "logistic"), default="transformer")
    t.add_argument("--epochs", type=int, default=1)
    t.add_argument("--lora", action="store_true", help="low-rank adapters on attention q/v")
    t.add_argument("--threshold-T", type=int, default=64, dest="threshold_t")
    t.add_argument("--scale-a", type=float, default=2.298)
    t.add_argument("--seed", type=int, default=1)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--batch-size", type=int, default=64)
    t.add_argument("--out", required=True)

    e = sub.add_parser("export", help="write per-flow prediction CSV")
    e.add_argument("--model", required=True)
    e.add_argument("--trace", required=True)
    e.add_argument("--threshold-T", type=int, default=64, dest="threshold_t")
    e.add_argument("--scale-a", type=float, default=2.298)
    e.add_argument("--out", required=True)

    s = sub.add_parser("serve", help="serve scores over the line protocol")
    s.add_argument("--model", required=True)
    s.add_argument("--listen", default="127.0.0.1:7787", help="host:port")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            rows = read_trace(args.trace)
            dataset = build_dataset(rows, args.threshold_t, args.scale_a)
            cfg = TrainerConfig(model=args.model, epochs=args.epochs, lora=args.lora,
                                threshold=args.threshold_t, scale=args.scale_a,
                                seed=args.seed, lr=args.lr, batch_size=args.batch_size)
            result = train(cfg, dataset)
            save_model(result.model, args.out)
            print(f"trained {args.model} on {len(dataset)} examples "
                  f"({dataset.skipped} rows skipped); loss {result.initial_loss:.4f} -> "
                  f"{result.final_loss:.4f}; train accuracy {result.train_accuracy:.3f}; "
                  f"saved to {args.out}")
        elif args.command == "export":
            from .export import export_predictions

            model = load_model(args.model)
            rows = read_trace(args.trace)
            n = export_predictions(model, rows, args.out, args.threshold_t, args.scale_a)
            print(f"wrote {n} flow scores to {args.out}")
        else:
            from .serve import serve

            model = load_model(args.model)
            host, _, port = args.listen.rpartition(":")
            print(f"serving on {host}:{port}")
            serve(model, host, int(port), ready_callback=lambda p: None)
    except (TrainingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
