"""Conjecture probe on the line: derivative ratio of the centered maximal function.

Prints a report only; the numbers say nothing about the truth of the bound.
usage: python3 scripts/probe_table.py [--n 20] [--seed 1000] [--h 0.01]
"""

import argparse

import numpy as np

from fracmax.convergence import conjecture_probe_1d
from fracmax.profiles import random_line


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--seed", type=int, default=1000)
    ap.add_argument("--h", type=float, default=0.01)
    args = ap.parse_args()
    corpus = [random_line(args.seed + i, args.h) for i in range(args.n)]
    for beta in (0.3, 0.5, 0.7):
        rep = conjecture_probe_1d(corpus, beta)
        print(rep.summary())
        print(f"  ratios: median={np.median(rep.ratios):.4f} max={rep.max_ratio:.4f} "
              f"(function {rep.argmax}) max drift={np.max(rep.drift):.3f}")


if __name__ == "__main__":
    main()
