#!/usr/bin/env python3
"""Write the CSV data behind every figure scenario into one directory."""
import argparse
import time

import numpy as np

from odtexpand.harness.figures import FIGURES, figure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--only", nargs="*", choices=FIGURES, default=list(FIGURES))
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--points", type=int, default=None, help="t_f points for the sweeps (default 31, 8 for fig7)")
    args = ap.parse_args()
    for name in args.only:
        tf_grid = None
        if args.points:
            lo = 0.4e-3 if name == "fig7" else 0.2e-3
            tf_grid = tuple(float(x) for x in np.geomspace(lo, 3e-3, args.points))
        start = time.time()
        paths = figure(name, args.outdir, workers=args.workers, tf_grid=tf_grid)
        print(f"{name}: {', '.join(map(str, paths))} ({time.time() - start:.0f} s)")


if __name__ == "__main__":
    main()
