"""Figure scenarios: each writes one or more CSV files and returns their paths."""
import math
import os
from typing import Dict, Optional, Sequence

import numpy as np

from ..perturbation import (PerturbationContext, fidelity_first_order_bound, radial_fidelity_estimate,
                            second_order_fidelity)
from ..propagators import fidelity, propagate_radial, radial_shape
from ..protocols import bang_bang_time, fast_adiabatic, ideal_radial_omega_sq, invariant_protocol, make_trajectory
from ..spectral import radial_eigenstate, radial_expanding_mode, stationary_state_numeric
from ..errors import PhysicsDomainError
from .config import RunConfig
from .output import RunManifest, write_csv
from .runner import (RESULT_COLUMNS, PointResult, Scenario, log_tf_grid, prepare, result_row, safe_point,
                     sweep_parallel)

WAISTS = (3e-6, 10e-6)
FIGURES = ("fig2a", "fig2b", "fig3", "fig4", "fig5", "fig6", "fig7")


def _write_results(path, results, manifest, extra_cols=(), extra=None):
    rows = [result_row(r) + tuple(extra[i] if extra else ()) for i, r in enumerate(results)]
    return write_csv(path, RESULT_COLUMNS + tuple(extra_cols), rows,
                     {"units": "SI except max_potential_energy_trap (hbar omega0z)"}, manifest)


def _bang_bang_points(base: RunConfig, waists=WAISTS):
    tb = bang_bang_time(2 * math.pi * base.f0z_hz, 2 * math.pi * base.ffz_hz)
    return [base.with_(protocol="bang-bang", waist_m=w, tf_s=tb) for w in waists]


def _sweep_with_bang_bang(name, base, tf_grid, workers, protocols=("invariant",), waists=WAISTS):
    points = []
    for proto in protocols:
        s = Scenario(name, base.with_(protocol=proto), tuple(waists), (0,), tuple(tf_grid))
        points += s.points()
    points += _bang_bang_points(base, waists)
    results = sweep_parallel(safe_point, points, workers)
    manifest = RunManifest(name, {"base": base.as_dotted(), "waists": list(waists),
                                  "tf_grid": list(tf_grid), "protocols": list(protocols)},
                           _units(base), [dict(p.as_dotted(), status=r.status) for p, r in zip(points, results)])
    return points, results, manifest


def _units(base: RunConfig):
    u = base.task().units()
    return {"time_s": u.time, "length_m": u.length, "energy_J": u.energy}


def fig2a(outdir, tf_grid=None, workers=None, base: RunConfig = None):
    """Longitudinal fidelity of the invariant protocol versus t_f, both waists, plus bang-bang."""
    base = (base or RunConfig()).with_(axis="longitudinal")
    tf_grid = tf_grid or log_tf_grid()
    _, results, manifest = _sweep_with_bang_bang("fig2a", base, tf_grid, workers)
    return [_write_results(os.path.join(outdir, "fig2a.csv"), results, manifest)]


def fig2b(outdir, tf_grid=None, workers=None, base: RunConfig = None):
    """25 Hz target: invariant (repulsive stretches allowed) against fast adiabatic."""
    base = (base or RunConfig()).with_(axis="longitudinal", ffz_hz=25.0, allow_repulsive=True)
    tf_grid = tf_grid or log_tf_grid()
    _, results, manifest = _sweep_with_bang_bang("fig2b", base, tf_grid, workers,
                                                 ("invariant", "fast-adiabatic"))
    return [_write_results(os.path.join(outdir, "fig2b.csv"), results, manifest)]


def fig3_rows(levels=range(6), waists=WAISTS, tf_s=2.5e-3, base: RunConfig = None, workers=None):
    """Rows (n, waist, bound, quintic bound, first-order, second-order, numeric)."""
    base = (base or RunConfig()).with_(axis="longitudinal", ffz_hz=25.0, tf_s=tf_s, protocol="invariant")
    points = [base.with_(waist_m=w, n=n) for w in waists for n in levels]
    numeric = sweep_parallel(safe_point, points, workers)
    rows = []
    for cfg, res in zip(points, numeric):
        ctx = PerturbationContext.quintic(cfg.task(), cfg.n)
        fb = fidelity_first_order_bound(ctx)
        rows.append((cfg.n, cfg.waist_m, fb.bound, fb.quintic_bracket, fb.estimate,
                     second_order_fidelity(ctx), res.fidelity))
    return points, rows


def fig3(outdir, workers=None, base: RunConfig = None):
    points, rows = fig3_rows(base=base, workers=workers)
    manifest = RunManifest("fig3", {"points": [p.as_dotted() for p in points]}, _units(points[0]))
    cols = ("n", "waist_m", "bound", "quintic_bound", "first_order_estimate", "second_order_estimate",
            "numeric_fidelity")
    return [write_csv(os.path.join(outdir, "fig3.csv"), cols, rows, {"units": "SI"}, manifest)]


def adiabatic_estimate(cfg: RunConfig) -> float:
    """sqrt(1 - |a1|^2) for the configuration's trajectory; NaN when not defined."""
    try:
        traj = make_trajectory(cfg.protocol, cfg.task(), allow_repulsive=cfg.allow_repulsive)
        return radial_fidelity_estimate(traj)
    except PhysicsDomainError:
        return math.nan


def fig4(outdir, tf_grid=None, workers=None, base: RunConfig = None):
    """Radial fidelity versus t_f with the adiabatic-perturbation estimate."""
    base = (base or RunConfig()).with_(axis="radial")
    tf_grid = tf_grid or log_tf_grid()
    points, results, manifest = _sweep_with_bang_bang("fig4", base, tf_grid, workers)
    est = [(adiabatic_estimate(p),) for p in points]
    return [_write_results(os.path.join(outdir, "fig4.csv"), results, manifest, ("adiabatic_estimate",), est)]


def fig5_columns(tf_s=0.36e-3, waist_m=3e-6, n_samples=721, base: RunConfig = None):
    """omega_R^2(t): actual (invariant), ideal radial inverse engineering, fast adiabatic."""
    base = (base or RunConfig()).with_(waist_m=waist_m, tf_s=tf_s)
    task = base.task()
    inv = invariant_protocol(task)
    fa = fast_adiabatic(task)
    t = np.linspace(0.0, tf_s, n_samples)
    return {"t_s": t, "omega_R_sq_actual": np.asarray(inv.omega_r_sq(t)),
            "omega_R_sq_ideal_inverse": np.asarray(ideal_radial_omega_sq(inv, t)),
            "omega_R_sq_fast_adiabatic": np.asarray(fa.omega_r_sq(t))}


def fig5(outdir, base: RunConfig = None):
    cols = fig5_columns(base=base)
    b = (base or RunConfig()).with_(waist_m=3e-6, tf_s=0.36e-3)
    manifest = RunManifest("fig5", {"config": b.as_dotted()}, _units(b))
    names = list(cols)
    rows = list(zip(*(cols[k] for k in names)))
    return [write_csv(os.path.join(outdir, "fig5.csv"), names, rows, {"units": "s, rad^2/s^2"}, manifest)]


def fig6_series(tf_s=0.6e-3, waist_m=3e-6, samples=240, base: RunConfig = None):
    """Overlaps of the evolving radial state with instantaneous and ideal expanding modes.

    Returns a dict of arrays: t_s, instantaneous (harmonic eigenstate at omega_R(t)),
    instantaneous_full (numeric eigenstate of the full radial trap) and expanding_mode
    (harmonic expanding mode of the ideal radial inverse engineering with the same b).
    """
    cfg = (base or RunConfig()).with_(axis="radial", protocol="invariant", tf_s=tf_s, waist_m=waist_m, n=0)
    plan, psi0, _ = prepare(cfg)
    traj = plan.trajectory
    grid = plan.r_grid
    ratio = traj.geometry.radial_ratio
    u = radial_shape(grid.points, traj.geometry)

    def inst(t, psi):
        return fidelity(radial_eigenstate(0, ratio * float(traj.omega_z(t)), grid, check=False), psi)

    def inst_full(t, psi):
        phi, _ = stationary_state_numeric(float(traj.omega_z_sq(t)) * u, grid, 0)
        return fidelity(phi, psi)

    def mode(t, psi):
        b, bdot, _, _ = traj.scaling.time_derivatives(t)
        return fidelity(radial_expanding_mode(0, ratio, float(b), float(bdot), grid), psi)

    every = max(1, plan.n_steps // samples)
    res = propagate_radial(psi0, plan, observers={"instantaneous": inst, "instantaneous_full": inst_full,
                                                  "expanding_mode": mode}, every=every)
    w0 = cfg.task().omega0_z
    snaps = res.snapshots
    out = {"t_s": np.array([s["t"] for s in snaps]) / w0}
    for k in ("instantaneous", "instantaneous_full", "expanding_mode"):
        out[k] = np.array([s[k] for s in snaps])
    return out


def fig6(outdir, base: RunConfig = None):
    series = fig6_series(base=base)
    b = (base or RunConfig()).with_(axis="radial", tf_s=0.6e-3, waist_m=3e-6)
    manifest = RunManifest("fig6", {"config": b.as_dotted()}, _units(b))
    names = list(series)
    rows = list(zip(*(series[k] for k in names)))
    return [write_csv(os.path.join(outdir, "fig6.csv"), names, rows, {"units": "s, dimensionless"}, manifest)]


def compare_3d(cfg: RunConfig) -> Dict[str, PointResult]:
    """Coupled run plus the radial and longitudinal 1D runs of the same configuration."""
    return {axis: safe_point(cfg.with_(axis=axis, nz=cfg.nz if axis == "3d" else 0,
                                       nr=cfg.nr if axis == "3d" else 0))
            for axis in ("3d", "radial", "longitudinal")}


def fig7_points(tf_grid, waists=WAISTS, base: RunConfig = None):
    base = (base or RunConfig()).with_(axis="3d", n=0)
    pts = [base.with_(protocol=p, waist_m=w, tf_s=tf)
           for p in ("invariant", "fast-adiabatic") for w in waists for tf in tf_grid]
    return pts + _bang_bang_points(base, waists)


def fig7(outdir, tf_grid=None, workers=None, base: RunConfig = None):
    """3D fidelity with the 1D radial and longitudinal fidelities alongside."""
    tf_grid = tf_grid or log_tf_grid(0.4e-3, 3e-3, 8)
    points = fig7_points(tf_grid, base=base)
    triples = sweep_parallel(compare_3d, points, workers)
    results = [t["3d"] for t in triples]
    extra = [(t["radial"].fidelity, t["longitudinal"].fidelity) for t in triples]
    manifest = RunManifest("fig7", {"points": [p.as_dotted() for p in points]}, _units(points[0]),
                           [{"status": r.status, "message": r.message} for r in results])
    return [_write_results(os.path.join(outdir, "fig7.csv"), results, manifest,
                           ("radial_fidelity", "longitudinal_fidelity"), extra)]


def figure(name: str, outdir: str, workers: Optional[int] = None, tf_grid: Optional[Sequence[float]] = None):
    if name not in FIGURES:
        raise ValueError(f"unknown figure {name!r}; expected one of {FIGURES}")
    os.makedirs(outdir, exist_ok=True)
    if name in ("fig3",):
        return fig3(outdir, workers=workers)
    if name in ("fig5", "fig6"):
        return globals()[name](outdir)
    return globals()[name](outdir, tf_grid=tf_grid, workers=workers)
