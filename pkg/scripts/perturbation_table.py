#!/usr/bin/env python3
"""Numeric longitudinal fidelity next to the bound and the perturbative estimates, per level."""
import argparse

from odtexpand.harness.config import RunConfig
from odtexpand.harness.figures import fig3_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=6)
    ap.add_argument("--tf", type=float, default=2.5e-3, help="protocol duration in s")
    ap.add_argument("--ffz", type=float, default=25.0, help="final longitudinal frequency in Hz")
    ap.add_argument("--waists", type=float, nargs="+", default=[3e-6, 10e-6])
    args = ap.parse_args()
    base = RunConfig(ffz_hz=args.ffz)
    _, rows = fig3_rows(range(args.levels), tuple(args.waists), args.tf, base)
    print(f"{'n':>2} {'w0[um]':>7} {'bound':>9} {'quintic':>9} {'1st ord':>9} {'2nd ord':>9} {'numeric':>9}")
    for n, w, b, bq, f1, f2, num in rows:
        print(f"{n:>2} {w * 1e6:7.1f} {b:9.5f} {bq:9.5f} {f1:9.5f} {f2:9.5f} {num:9.5f}")


if __name__ == "__main__":
    main()
