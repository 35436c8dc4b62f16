"""Exact excitation-count distributions of the coarse-grained detector.

Compares, for a fixed-excitation ensemble of N two-level atoms, the
statistics of k atoms kept by a partial trace against the statistics of k
saturated detector blocks. Defaults run the full-scale case (N = 10000,
Np = 200, k = 1000); the exact big-integer path makes that cheap.

Usage:
    python scripts/energy_distributions.py [--N 10000] [--Np 200] [--k 1000]
                                           [--out energy.csv]
"""

import argparse
import sys

from qtypical.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--N", type=int, default=10000)
    parser.add_argument("--Np", type=int, default=200)
    parser.add_argument("--k", type=int, default=1000)
    parser.add_argument("--out", default="energy.csv")
    args = parser.parse_args()
    return cli_main(["figure-energy", "--N", str(args.N), "--Np", str(args.Np),
                     "--k", str(args.k), "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
