"""Mean distance to the detector canonical state versus the entropy bound.

Sweeps the excitation number Np = 1 .. N-1 for an N-atom system read out in
k detector blocks, sampling Haar-random pure states on each restricted
subspace. One CSV (plus a companion plot script) per block count.

Usage:
    python scripts/typicality_bounds.py [--N 8] [--samples 500] [--seed 2024]
                                        [--k 2 4] [--out-prefix bound]
"""

import argparse
import sys

from qtypical.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--N", type=int, default=8)
    parser.add_argument("--samples", type=int, default=500)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--k", type=int, nargs="+", default=[2, 4])
    parser.add_argument("--out-prefix", default="bound")
    args = parser.parse_args()
    for k in args.k:
        code = cli_main(["figure-bound", "--N", str(args.N), "--k", str(k),
                         "--samples", str(args.samples), "--seed", str(args.seed),
                         "--out", f"{args.out_prefix}_k{k}.csv"])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
