"""Command-line entry point: train checkpoints, serve them, sweep splits."""

import argparse
import json
import sys
from pathlib import Path

from .model import TinyModel
from .serving import serve_stdio, serve_tcp
from .training import train_tiny


def cmd_train(args) -> int:
    result = train_tiny(
        args.dataset,
        split_percent=args.split_percent,
        trial=args.trial,
        seed=args.seed,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
    )
    out = Path(args.checkpoint)
    out.parent.mkdir(parents=True, exist_ok=True)
    result.model.save(out)
    report = {
        "checkpoint": str(out),
        "split_percent": args.split_percent,
        "trial": args.trial,
        "seed": args.seed,
        "epochs": args.epochs,
        "n_train": result.n_train,
        "n_test": result.n_test,
        "train_accuracy": result.train_accuracy,
        "test_accuracy": result.test_accuracy,
        "majority_baseline": result.majority_baseline,
    }
    print(json.dumps(report, indent=1))
    return 0


def cmd_serve(args) -> int:
    model = TinyModel.load(args.checkpoint)
    if args.listen:
        host, _, port = args.listen.rpartition(":")
        serve_tcp(model, host or "127.0.0.1", int(port))
    else:
        serve_stdio(model)
    return 0


def cmd_sweep(args) -> int:
    rows = []
    for pct in args.split_percents:
        accs = [
            train_tiny(
                args.dataset, split_percent=pct, trial=t, seed=args.seed,
                epochs=args.epochs,
            ).test_accuracy
            for t in range(args.trials)
        ]
        rows.append({"split_percent": pct, "mean_test_accuracy": sum(accs) / len(accs),
                     "trial_accuracies": accs})
        print(json.dumps(rows[-1]), flush=True)
    if args.out:
        Path(args.out).write_text(json.dumps(rows, indent=1))
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="example-player", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a checkpoint on a grid-lab dataset")
    t.add_argument("--dataset", required=True)
    t.add_argument("--checkpoint", required=True)
    t.add_argument("--split-percent", type=float, default=90.0)
    t.add_argument("--trial", type=int, default=0)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--epochs", type=int, default=2)
    t.add_argument("--batch-size", type=int, default=64)
    t.add_argument("--learning-rate", type=float, default=0.05)
    t.set_defaults(fn=cmd_train)

    s = sub.add_parser("serve", help="answer requests on stdio (or --listen host:port)")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--listen", default=None)
    s.set_defaults(fn=cmd_serve)

    w = sub.add_parser("sweep", help="train-split sweep with per-split trial averages")
    w.add_argument("--dataset", required=True)
    w.add_argument("--split-percents", type=float, nargs="+", default=[25, 50, 75, 90])
    w.add_argument("--trials", type=int, default=10)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--epochs", type=int, default=2)
    w.add_argument("--out", default=None)
    w.set_defaults(fn=cmd_sweep)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, ValueError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
