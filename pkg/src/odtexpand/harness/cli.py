"""Command line entry point.

Exit codes: 0 success, 1 usage error (or failed checks), 2 physics-domain error.
"""
import argparse
import sys

import numpy as np

from ..errors import PhysicsDomainError
from ..perturbation import bounds_table
from ..protocols import make_trajectory, trajectory_table
from ..spectral import Wavefunction1D
from .checks import run_checks
from .config import load_config
from .figures import FIGURES, figure
from .output import RunManifest, csv_text, write_csv
from .runner import RESULT_COLUMNS, result_row, run_point


def _config_args(p):
    p.add_argument("--config", help="key = value file with dotted keys")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one key (repeatable), e.g. --set protocol.tf_s=0.8e-3")


def _out_arg(p):
    p.add_argument("--out", help="write CSV here instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="odtexpand", description="Fast expansions of optical dipole traps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("protocol", help="dump a trap-frequency trajectory")
    _config_args(p)
    _out_arg(p)
    p.add_argument("--samples", type=int, default=1001)

    for name, axis in (("expand-z", "longitudinal"), ("expand-r", "radial"), ("expand-3d", "3d")):
        p = sub.add_parser(name, help=f"single {axis} propagation")
        _config_args(p)
        _out_arg(p)
        p.add_argument("--dump-wavefunction", metavar="CSV", help="write final and target states")
        p.set_defaults(axis=axis)

    p = sub.add_parser("figure", help="reproduce one figure as CSV")
    p.add_argument("name", choices=FIGURES)
    p.add_argument("--outdir", default="results")
    p.add_argument("--workers", type=int, default=None, help="defaults to $ODTEXPAND_WORKERS or 1")
    p.add_argument("--points", type=int, default=None, help="number of log-spaced t_f points")
    p.add_argument("--tf-range", nargs=2, type=float, metavar=("LO", "HI"), default=None,
                   help="t_f sweep range in seconds")

    p = sub.add_parser("bounds", help="perturbative bound and estimate table")
    _config_args(p)
    _out_arg(p)
    p.add_argument("--levels", type=int, default=6, help="levels 0..LEVELS-1")

    p = sub.add_parser("check", help="run the invariant/property suite")
    p.add_argument("--only", default=None, help="substring filter on check names")
    return parser


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump_wavefunction(path, res):
    final, target = res.extras["final"], res.extras["target"]
    if isinstance(final, Wavefunction1D):
        cols = ("x", "re_final", "im_final", "re_target", "im_target")
        rows = zip(final.grid.points, final.samples.real, final.samples.imag,
                   target.samples.real, target.samples.imag)
    else:
        r, z = np.meshgrid(final.r_grid.points, final.z_grid.points, indexing="ij")
        cols = ("r", "z", "re_final", "im_final", "re_target", "im_target")
        rows = zip(r.ravel(), z.ravel(), final.samples.real.ravel(), final.samples.imag.ravel(),
                   target.samples.real.ravel(), target.samples.imag.ravel())
    write_csv(path, cols, list(rows), {"units": "trap units (length a0, amplitude a0^-1/2)"})


def cmd_protocol(args):
    cfg = load_config(args.config, args.overrides)
    traj = make_trajectory(cfg.protocol, cfg.task(), allow_repulsive=cfg.allow_repulsive)
    table = trajectory_table(traj, args.samples)
    names = list(table)
    manifest = RunManifest("protocol", {"config": cfg.as_dotted()})
    _emit(csv_text(names, list(zip(*(table[k] for k in names))),
                   {"units": "SI", "manifest_sha256": manifest.sha256}), args.out)
    return 0


def cmd_expand(args):
    cfg = load_config(args.config, args.overrides).with_(axis=args.axis)
    res = run_point(cfg, keep_states=bool(args.dump_wavefunction))
    manifest = RunManifest(f"expand-{cfg.axis}", {"config": cfg.as_dotted()})
    _emit(csv_text(RESULT_COLUMNS, [result_row(res)],
                   {"units": "SI except max_potential_energy_trap (hbar omega0z)",
                    "manifest_sha256": manifest.sha256}), args.out)
    if args.dump_wavefunction:
        _dump_wavefunction(args.dump_wavefunction, res)
    return 0


def cmd_figure(args):
    tf_grid = None
    if args.points or args.tf_range:
        lo, hi = args.tf_range or (0.2e-3, 3e-3)
        if not 0 < lo < hi:
            raise ValueError("--tf-range needs 0 < LO < HI")
        tf_grid = tuple(float(x) for x in np.geomspace(lo, hi, args.points or 31))
    for path in figure(args.name, args.outdir, workers=args.workers, tf_grid=tf_grid):
        print(path)
    return 0


def cmd_bounds(args):
    cfg = load_config(args.config, args.overrides)
    rows = bounds_table(cfg.task(), list(range(args.levels)))
    cols = ("n", "bound", "first_order_estimate", "second_order_estimate", "numeric_fidelity")
    manifest = RunManifest("bounds", {"config": cfg.as_dotted()})
    _emit(csv_text(cols, rows, {"units": "dimensionless", "manifest_sha256": manifest.sha256}), args.out)
    return 0


def cmd_check(args):
    results = run_checks(lambda name: args.only is None or args.only in name)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"protocol": cmd_protocol, "expand-z": cmd_expand, "expand-r": cmd_expand,
            "expand-3d": cmd_expand, "figure": cmd_figure, "bounds": cmd_bounds, "check": cmd_check}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; remap so 2 stays reserved for physics
        return 0 if exc.code == 0 else 1
    try:
        return COMMANDS[args.command](args)
    except PhysicsDomainError as exc:
        print(f"physics-domain error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
