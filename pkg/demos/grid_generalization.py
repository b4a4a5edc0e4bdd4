"""Train-split generalization sweep with an accuracy curve figure.

Trains the tiny external player on X% of the 2-object Onehop grid dataset
for X in {25, 50, 75, 90}, averages held-out accuracy over trials, and
renders the accuracy-vs-split curve as an SVG chart.
"""

import argparse
from pathlib import Path

import numpy as np

from example_player.training import train_tiny
from scenegame.viz import Series, render_chart


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dataset", default="data/grid-onehop-2obj")
    ap.add_argument("--splits", type=float, nargs="+", default=[25, 50, 75, 90])
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="demo-out/generalization.svg")
    args = ap.parse_args()

    means = []
    for pct in args.splits:
        accs = [
            train_tiny(args.dataset, split_percent=pct, trial=t, seed=args.seed).test_accuracy
            for t in range(args.trials)
        ]
        means.append(float(np.mean(accs)))
        print(f"X={pct:.0f}%: mean held-out accuracy {means[-1]:.3f} "
              f"(min {min(accs):.3f}, max {max(accs):.3f})")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    svg = render_chart(
        [Series("held-out accuracy", tuple(args.splits), tuple(means))], kind="line"
    )
    out.write_text(svg)
    print(f"wrote accuracy curve to {out}")


if __name__ == "__main__":
    main()
