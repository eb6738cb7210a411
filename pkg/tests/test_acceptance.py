"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Long runs (coupled 2D propagation) are marked ``slow``; deselect with ``-m "not slow"``.
"""
import math
import time

import numpy as np
import pytest

from odtexpand.harness.checks import check_invariant_drift
from odtexpand.harness.config import RunConfig
from odtexpand.harness.figures import adiabatic_estimate, fig3_rows, fig6_series
from odtexpand.harness.runner import log_tf_grid, run_point, sweep_parallel
from odtexpand.perturbation import scaling_action_integral
from odtexpand.protocols import bang_bang_time, min_attractive_tf
from odtexpand.spectral import Wavefunction1D

from conftest import make_task

W3, W10 = 3e-6, 10e-6
BASE = RunConfig()
NORMS = []  # (label, final_norm, min_norm) of every propagation run here


def _run(cfg, **kw):
    res = run_point(cfg, **kw)
    NORMS.append((f"{cfg.axis}/{cfg.protocol}/{cfg.waist_m:g}/{cfg.tf_s:g}", res.final_norm, res.min_norm))
    return res


def _fidelity(cfg):
    return _run(cfg).fidelity


def _sweep(points):
    results = sweep_parallel(run_point, points)
    for cfg, res in zip(points, results):
        NORMS.append((f"{cfg.axis}/{cfg.protocol}/{cfg.waist_m:g}/{cfg.tf_s:g}", res.final_norm, res.min_norm))
    return results


def test_criterion_1_invariant_exactness(verdict):
    worst = 1.0
    for n in (0, 1, 2):
        for tf in (0.5e-3, 1e-3, 2e-3):
            worst = min(worst, _fidelity(BASE.with_(potential="harmonic", n=n, tf_s=tf)))
    ok = verdict(1, worst >= 0.9999, f"min harmonic fidelity {worst:.10f} (need >= 0.9999)")
    assert ok


def test_criterion_2_longitudinal_waist_independence(verdict):
    tfs = log_tf_grid(0.45e-3, 3e-3, 12)
    f3 = np.array([r.fidelity for r in _sweep([BASE.with_(tf_s=t, waist_m=W3) for t in tfs])])
    f10 = np.array([r.fidelity for r in _sweep([BASE.with_(tf_s=t, waist_m=W10) for t in tfs])])
    worst = float(min(f3.min(), f10.min()))
    gap = float(np.max(np.abs(f3 - f10)))
    ok = verdict(2, worst >= 0.999 and gap <= 2e-3,
                 f"min F {worst:.7f} (need >= 0.999), max waist gap {gap:.2e} (need <= 2e-3), "
                 f"{len(tfs)} t_f in [0.45, 3] ms")
    assert ok


def test_criterion_3_bang_bang_anchor(verdict):
    tb = bang_bang_time(2 * math.pi * 2500, 2 * math.pi * 250)
    # independent oracle: a quarter period of sqrt(2500 * 250) Hz
    rel = abs(tb - 0.25 / math.sqrt(2500.0 * 250.0)) * math.sqrt(2500.0 * 250.0) / 0.25
    anchor = float(f"{tb:.4e}") == 3.1623e-4
    fids = [_fidelity(BASE.with_(protocol="bang-bang", waist_m=w, tf_s=tb)) for w in (W3, W10)]
    ok = verdict(3, rel <= 1e-6 and anchor and min(fids) >= 0.99,
                 f"t_bang = {tb:.8e} s (closed-form rel. dev. {rel:.1e}, rounds to 3.1623e-4: {anchor}), "
                 f"F = {fids[0]:.7f} (3 um), {fids[1]:.7f} (10 um), need >= 0.99")
    assert ok


def test_criterion_4_low_final_frequency_ordering(verdict):
    cfg = BASE.with_(ffz_hz=25.0, tf_s=1e-3, allow_repulsive=True)
    parts, ok = [], True
    for w in (W3, W10):
        fi = _fidelity(cfg.with_(protocol="invariant", waist_m=w))
        fa = _fidelity(cfg.with_(protocol="fast-adiabatic", waist_m=w))
        ok &= fi >= 0.99 and fa <= fi - 0.05
        parts.append(f"{w * 1e6:g} um: invariant {fi:.5f}, fast-adiabatic {fa:.4f}")
    ok = verdict(4, ok, "; ".join(parts))
    assert ok


def test_criterion_5_perturbative_agreement(verdict):
    points, rows = fig3_rows(levels=range(6), waists=(W3, W10))
    r3 = [r for r in rows if r[1] == W3]
    r10 = [r for r in rows if r[1] == W10]
    num3 = [r[6] for r in r3]
    mono = all(b <= a + 5e-3 for a, b in zip(num3, num3[1:]))
    dev = [abs(r[5] - r[6]) for r in r3]
    b0, b5 = r3[0][2], r3[5][2]
    bounds_ok = abs(b0 - 0.9944) <= 0.01 and abs(b5 - 0.661) <= 0.01
    low10 = min(min(r[2], r[5], r[6]) for r in r10)
    parts = {
        "a": (mono, "numeric F_L " + ", ".join(f"{x:.5f}" for x in num3)),
        "b": (max(dev) <= 0.02, "|second order - numeric| " + ", ".join(f"{x:.4f}" for x in dev)),
        "c": (bounds_ok, f"bound n=0 {b0:.5f} (0.9944), n=5 {b5:.5f} (0.661)"),
        "d": (low10 >= 0.997, f"10 um min of bound/second order/numeric {low10:.5f}"),
    }
    for key, (ok, detail) in parts.items():
        verdict(f"5({key})", ok, detail)
    assert all(ok for ok, _ in parts.values())


def test_criterion_6_radial(verdict):
    radial = BASE.with_(axis="radial")
    tb = bang_bang_time(2 * math.pi * 2500, 2 * math.pi * 250)
    bb = [_fidelity(radial.with_(protocol="bang-bang", waist_m=w, tf_s=tb)) for w in (W3, W10)]
    inv3 = [_fidelity(radial.with_(waist_m=W3, tf_s=t)) for t in (1.2e-3, 1.6e-3, 2.2e-3, 3e-3)]
    inv10 = [_fidelity(radial.with_(waist_m=W10, tf_s=t)) for t in (0.6e-3, 0.9e-3, 1.4e-3, 2.2e-3, 3e-3)]
    est_dev = []
    for w in (W3, W10):
        for t in log_tf_grid(0.45e-3, 1.2e-3, 5):
            cfg = radial.with_(waist_m=w, tf_s=t)
            est_dev.append(abs(adiabatic_estimate(cfg) - _fidelity(cfg)))
    checks = {
        "bang-bang": (max(bb) <= 0.9, f"F = {bb[0]:.4f} (3 um), {bb[1]:.4f} (10 um), need <= 0.9"),
        "invariant": (min(inv3) >= 0.99 and min(inv10) >= 0.99,
                      f"min F {min(inv3):.5f} (3 um, t_f >= 1.2 ms), {min(inv10):.5f} (10 um, t_f >= 0.6 ms)"),
        "estimate": (max(est_dev) <= 0.02, f"max |estimate - exact| {max(est_dev):.2e} over [0.45, 1.2] ms"),
    }
    for key, (ok, detail) in checks.items():
        verdict(f"6 ({key})", ok, detail)
    assert all(ok for ok, _ in checks.values())


def test_criterion_7_attractivity_threshold(verdict):
    t = min_attractive_tf(make_task())
    ok = verdict(7, 0.30e-3 <= t <= 0.45e-3, f"t_min = {t * 1e3:.5f} ms (need in [0.30, 0.45])")
    assert ok


def test_criterion_8_radial_mode_tracking(verdict):
    s = fig6_series(tf_s=0.6e-3, waist_m=W3)
    inst = float(np.min(s["instantaneous_full"]))
    inst_h = float(np.min(s["instantaneous"]))
    mode = float(np.min(s["expanding_mode"]))
    a = verdict("8(a)", inst >= 0.95,
                f"min instantaneous-eigenstate overlap {inst:.4f} (harmonic reference {inst_h:.4f}), need >= 0.95")
    b = verdict("8(b)", mode <= 0.8, f"min ideal-expanding-mode overlap {mode:.4f}, need <= 0.8")
    assert a and b


def _fig7_checks(nr, nz, tol_scale):
    base = BASE.with_(axis="3d", nr=nr, nz=nz)
    tfs = (0.6e-3, 0.9e-3, 1.3e-3, 2e-3)
    tb = bang_bang_time(2 * math.pi * 2500, 2 * math.pi * 250)
    out = {}
    f3d = _fidelity(base.with_(waist_m=W10, tf_s=1e-3))
    out["a"] = (f3d >= 0.99, f"F_3D {f3d:.5f} at 1 ms, 10 um (need >= 0.99)")
    for key, proto, axis1d, tol in (("b", "invariant", "radial", 0.02), ("c", "fast-adiabatic", "longitudinal", 0.02)):
        worst, where = 0.0, ""
        for w in (W3, W10):
            for t in tfs:
                cfg = base.with_(protocol=proto, waist_m=w, tf_s=t)
                d = abs(_fidelity(cfg) - _fidelity(cfg.with_(axis=axis1d, nr=0, nz=0)))
                if d >= worst:
                    worst, where = d, f"{w * 1e6:g} um, {t * 1e3:g} ms"
        out[key] = (worst <= tol * tol_scale, f"{proto}: max |F_3D - F_{axis1d[0].upper()}| {worst:.2e} "
                                              f"at {where} (need <= {tol * tol_scale:g})")
    dev = []
    for w in (W3, W10):
        cfg = base.with_(protocol="bang-bang", waist_m=w, tf_s=tb)
        dev.append(abs(_fidelity(cfg) - _fidelity(cfg.with_(axis="radial", nr=0, nz=0))))
    out["d"] = (max(dev) <= 0.05 * tol_scale,
                f"bang-bang max |F_3D - F_R| {max(dev):.2e} (need <= {0.05 * tol_scale:g})")
    return out


@pytest.mark.slow
def test_criterion_9_coupled_smoke(verdict):
    start = time.time()
    checks = _fig7_checks(64, 128, 2.0)
    elapsed = time.time() - start
    for key, (ok, detail) in checks.items():
        verdict(f"9({key}) smoke 64x128", ok, detail)
    verdict("9 smoke runtime", elapsed <= 300, f"{elapsed:.0f} s (need <= 300 s)")
    assert all(ok for ok, _ in checks.values()) and elapsed <= 300


@pytest.mark.slow
def test_criterion_9_coupled_default(verdict):
    checks = _fig7_checks(0, 0, 1.0)
    for key, (ok, detail) in checks.items():
        verdict(f"9({key}) 128x256", ok, detail)
    assert all(ok for ok, _ in checks.values())


def _richardson(cfg):
    """||psi(h) - psi(h/2)|| / ||psi(h/2) - psi(h/4)|| for h = one 50th of a period."""
    states = [_run(cfg.with_(steps_per_period=s), keep_states=True).extras["final"] for s in (50, 100, 200)]
    d1 = (states[0].samples - states[1].samples)
    d2 = (states[1].samples - states[2].samples)
    g = states[0].grid
    return Wavefunction1D(g, d1).norm / Wavefunction1D(g, d2).norm


def test_criterion_10_numerics(verdict):
    results = {}
    r_so = _richardson(BASE.with_(tf_s=1e-3))
    r_cn = _richardson(BASE.with_(axis="radial", tf_s=1e-3))
    results["dt-halving"] = (abs(r_so - 4) <= 1.2 and abs(r_cn - 4) <= 1.2,
                             f"split-operator {r_so:.3f}, Crank-Nicolson {r_cn:.3f} (need 4 +- 30%)")

    sep = BASE.with_(protocol="fast-adiabatic", tf_s=0.6e-3, potential="harmonic")
    # z resolution chosen so the finite-difference longitudinal kinetic matches the spectral one below 1e-4
    f3 = _fidelity(sep.with_(axis="3d", nr=128, nz=1024))
    fr = _fidelity(sep.with_(axis="radial", nr=128))
    fl = _fidelity(sep.with_(axis="longitudinal"))
    results["separability"] = (abs(f3 - fr * fl) <= 1e-4,
                               f"|F_3D - F_R F_L| = {abs(f3 - fr * fl):.2e} (F_3D {f3:.6f}, F_R {fr:.6f}, "
                               f"F_L {fl:.6f}), need <= 1e-4")

    ok_drift, drift = check_invariant_drift()
    results["invariant drift"] = (ok_drift, drift + " (need <= 1e-4)")

    ineq = [(g, scaling_action_integral("optimal", g, 1e-3), scaling_action_integral("quintic", g, 1e-3))
            for g in (1.5, 2.0, math.sqrt(10.0), 10.0)]
    results["variational"] = (all(a <= b for _, a, b in ineq),
                              "; ".join(f"gamma {g:.3g}: {a:.4g} <= {b:.4g}" for g, a, b in ineq))

    drift = max(max(abs(fn - 1.0), abs(mn - 1.0)) for _, fn, mn in NORMS)
    worst = max(NORMS, key=lambda x: max(abs(x[1] - 1.0), abs(x[2] - 1.0)))[0]
    results["norm"] = (drift <= 1e-7, f"max norm drift {drift:.2e} over {len(NORMS)} runs (worst {worst}), "
                                      "need <= 1e-7")
    for key, (ok, detail) in results.items():
        verdict(f"10 ({key})", ok, detail)
    assert all(ok for ok, _ in results.values())
