"""Run every JSON config in configs/ and print the verdict lines.

usage: python3 scripts/run_all_configs.py [--out runs] [--fast]
"""

import argparse
import sys
from pathlib import Path

from fracmax.cli import run_config
from fracmax.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT / "runs"))
    ap.add_argument("--fast", action="store_true", help="coarser grids and a smaller probe corpus")
    args = ap.parse_args()
    overrides = ["grid.h=0.02", "probe.n_functions=4"] if args.fast else []
    worst = 0
    for path in sorted((ROOT / "configs").glob("*.json")):
        cfg = load_config(path, overrides)
        code, out = run_config(cfg, Path(args.out) / path.stem)
        worst = max(worst, code)
        print(f"== {path.stem} (exit {code})")
        for line in out.lines:
            print("  " + line)
    return worst


if __name__ == "__main__":
    sys.exit(main())
