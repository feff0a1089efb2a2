#!/usr/bin/env python3
"""Plot success rate against density from a `bpdec sweep` summary CSV.

One line per (k, n), with the Wilson interval as a shaded band.

    python3 scripts/plot_sweep.py out/summary.csv -o rates.png
"""
import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

SCHEMA = "# bpdec sweep summary schema=1"


def load(path):
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
    if first != SCHEMA:
        sys.exit(f"{path}: expected '{SCHEMA}', got '{first}'")
    return pd.read_csv(path, comment="#")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("summary")
    ap.add_argument("-o", "--out", default="sweep.png")
    args = ap.parse_args()

    df = load(args.summary)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (k, n), g in df.groupby(["k", "n"]):
        g = g.sort_values("r")
        line, = ax.plot(g["r"], g["rate"], marker="o", label=f"k={k} n={n}")
        ax.fill_between(g["r"], g["ci_low"], g["ci_high"], color=line.get_color(), alpha=0.2)
    ax.set_xlabel("clause density r = m/n")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)


if __name__ == "__main__":
    main()
