#!/usr/bin/env python3
"""Plot learning curves from one or more metrics.csv files (mean over seeds, shaded standard error)."""

import argparse
import csv
import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(path, metric):
    curves = defaultdict(lambda: defaultdict(list))  # run_id -> step -> values
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            if row["metric"] != metric or row["value"] == "":
                continue
            curves[row["run_id"]][int(row["step"])].append(float(row["value"]))
    return curves


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", nargs="+")
    ap.add_argument("--metric", default="rmsve")
    ap.add_argument("--out", default="curves.png")
    ap.add_argument("--logy", action="store_true")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(7, 4))
    for path in args.csv:
        for run_id, by_step in sorted(load(path, args.metric).items()):
            steps = sorted(by_step)
            mean = [sum(by_step[s]) / len(by_step[s]) for s in steps]
            se = []
            for s, m in zip(steps, mean):
                v = by_step[s]
                sd = math.sqrt(sum((x - m) ** 2 for x in v) / (len(v) - 1)) if len(v) > 1 else 0.0
                se.append(sd / math.sqrt(len(v)))
            ax.plot(steps, mean, label=run_id)
            ax.fill_between(steps, [m - e for m, e in zip(mean, se)], [m + e for m, e in zip(mean, se)], alpha=0.2)
    ax.set_xlabel("step")
    ax.set_ylabel(args.metric)
    if args.logy:
        ax.set_yscale("log")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
