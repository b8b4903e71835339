"""Radial pipeline against the brute-force 2D oracle over a few profiles and exponents.

usage: python3 scripts/oracle_sweep.py [--h2 0.05] [--stride 1]
"""

import argparse

from fracmax.maximal import maximal_profile
from fracmax.oracle2d import compare_with_radial, oracle_maximal_2d, rasterize_radial
from fracmax.profiles import make_profile

CASES = [("tent", {"a": 1.0}), ("smoothed_indicator", {"a": 0.6, "ramp": 0.4}),
         ("parabola", {"a": 1.2})]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--h2", type=float, default=0.05)
    ap.add_argument("--stride", type=int, default=1)
    ap.add_argument("--h", type=float, default=0.01)
    args = ap.parse_args()
    print(f"{'profile':<20}{'beta':>6}{'max_gap':>10}{'median':>10}")
    for name, params in CASES:
        f = make_profile(name, params, (2, args.h, 2.0))
        grid = rasterize_radial(f, 2.0, args.h2)
        for beta in (0.0, 0.5, 1.0, 1.5):
            gap = compare_with_radial(oracle_maximal_2d(grid, beta, args.stride),
                                      maximal_profile(f, beta))
            print(f"{name:<20}{beta:>6.2f}{gap.max_gap:>10.4f}{gap.median_gap:>10.4f}")


if __name__ == "__main__":
    main()
