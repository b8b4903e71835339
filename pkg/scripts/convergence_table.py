"""Gradient convergence of the maximal function along approximating sequences.

usage: python3 scripts/convergence_table.py [--beta 0.5] [--variant noncentered] [--h 0.01]
"""

import argparse

from fracmax.convergence import SEQUENCE_KINDS, SequenceSpec, brezis_lieb_diagnostic, run_convergence
from fracmax.profiles import make_profile


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--variant", default="noncentered")
    ap.add_argument("--h", type=float, default=0.01)
    ap.add_argument("--j-max", type=int, default=8)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    f = make_profile("tent", {"a": 1.0}, (2, args.h, 2.0))
    for kind in SEQUENCE_KINDS:
        rep = run_convergence(f, SequenceSpec(kind, args.j_max, seed=args.seed), args.beta, args.variant)
        print(f"== {kind}")
        print(rep.to_csv(), end="")
        print(rep.summary())
        print(brezis_lieb_diagnostic(rep).summary())


if __name__ == "__main__":
    main()
