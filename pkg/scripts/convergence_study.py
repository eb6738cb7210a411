#!/usr/bin/env python3
"""Time-step and grid refinement for one configuration.

Prints the fidelity for each refinement and the ratio of successive
final-state differences, which should approach 4 for a second-order scheme.
"""
import argparse

from odtexpand.harness.config import load_config
from odtexpand.harness.runner import run_point
from odtexpand.spectral import Wavefunction1D


def diff_norm(a, b):
    return Wavefunction1D(a.grid, a.samples - b.samples).norm


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--steps", type=int, nargs="+", default=[50, 100, 200, 400], help="steps per period")
    ap.add_argument("--grids", type=int, nargs="*", default=[], help="point counts for a grid study")
    args = ap.parse_args()
    cfg = load_config(args.config, args.overrides)

    states = []
    for spp in args.steps:
        res = run_point(cfg.with_(steps_per_period=spp), keep_states=cfg.axis != "3d")
        line = f"steps/period {spp:5d}  dt {res.dt_s:.3e} s  F {res.fidelity:.10f}"
        if cfg.axis != "3d":
            states.append(res.extras["final"])
            if len(states) >= 3:
                ratio = diff_norm(states[-3], states[-2]) / diff_norm(states[-2], states[-1])
                line += f"  ratio {ratio:.3f}"
        print(line)

    key = "nz" if cfg.axis == "longitudinal" else "nr"
    for n in args.grids:
        changes = {key: n} if cfg.axis != "3d" else {"nr": n, "nz": 2 * n}
        res = run_point(cfg.with_(**changes))
        print(f"grid {changes}  F {res.fidelity:.10f}")


if __name__ == "__main__":
    main()
