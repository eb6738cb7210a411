"""Fast invariant and property checks behind ``odtexpand check``."""
import math
from typing import Callable, List, NamedTuple

import numpy as np

from ..perturbation import scaling_action_integral
from ..propagators import PropagationPlan, fidelity, propagate_longitudinal, propagate_radial
from ..protocols import ExpansionTask, FrequencyTrajectory, make_trajectory, min_attractive_tf
from ..spectral import (Grid1D, default_longitudinal_grid, harmonic_eigenstate_z, invariant_expectation,
                        stationary_state_numeric)
from ..propagators import radial_shape
from ..trap_model import AtomSpecies, BeamGeometry


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _task(tf_s=1e-3, w0=3e-6, ffz=250.0):
    return ExpansionTask(2 * math.pi * 2500, 2 * math.pi * ffz, tf_s, AtomSpecies(),
                         BeamGeometry(w0, 1.06e-6)).dimensionless()


def static_trajectory(task: ExpansionTask, t_final: float) -> FrequencyTrajectory:
    """Constant omega0 for t_final (a no-op expansion)."""
    w2 = task.omega0_z**2
    static = ExpansionTask(task.omega0_z, task.omega0_z, t_final, task.atom, task.geometry)
    return FrequencyTrajectory("static", static, t_final, lambda t: w2 + 0.0 * np.asarray(t),
                               lambda t: 0.0 * np.asarray(t), (), None, False, w2)


def check_static_longitudinal():
    task = _task()
    traj = static_trajectory(task, 10 * 2 * math.pi)
    g = Grid1D.longitudinal(12.0, 512)
    psi = harmonic_eigenstate_z(0, 1.0, g)
    res = propagate_longitudinal(psi, PropagationPlan.build(traj, "split-operator-z", z_grid=g,
                                                            potential="harmonic"))
    f = fidelity(psi, res.state)
    return f >= 1 - 1e-8, f"F = {f:.12f}"


def check_static_radial():
    task = _task()
    ratio = task.geometry.radial_ratio
    traj = static_trajectory(task, 10 * 2 * math.pi / ratio)
    g = Grid1D.radial(10.0 / math.sqrt(ratio), 512)
    psi, _ = stationary_state_numeric(radial_shape(g.points, task.geometry, "harmonic"), g, 0)
    res = propagate_radial(psi, PropagationPlan.build(traj, "crank-nicolson-r", r_grid=g, potential="harmonic"))
    f = fidelity(psi, res.state)
    return f >= 1 - 1e-6, f"F = {f:.12f}"


def check_invariant_exactness():
    worst = 1.0
    for tf in (0.5e-3, 1e-3, 2e-3):
        traj = make_trajectory("invariant", _task(tf), allow_repulsive=True)
        g = default_longitudinal_grid(traj.task.gamma, 0, traj.task.gamma, traj.max_omega())
        res = propagate_longitudinal(harmonic_eigenstate_z(0, 1.0, g),
                                     PropagationPlan.build(traj, "split-operator-z", z_grid=g, potential="harmonic"))
        worst = min(worst, fidelity(harmonic_eigenstate_z(0, traj.task.omegaf_z, g), res.state))
    return worst >= 0.9999, f"min F = {worst:.10f}"


def check_invariant_drift():
    traj = make_trajectory("invariant", _task(1e-3))
    g = default_longitudinal_grid(traj.task.gamma, 0, traj.task.gamma, traj.max_omega())

    def obs(t, psi):
        b, bd, _, _ = traj.scaling.time_derivatives(t)
        return invariant_expectation(psi, float(b), float(bd), 1.0)

    plan = PropagationPlan.build(traj, "split-operator-z", z_grid=g, potential="harmonic")
    res = propagate_longitudinal(harmonic_eigenstate_z(0, 1.0, g), plan, observers={"I": obs},
                                 every=max(1, plan.n_steps // 20))
    vals = np.array([s["I"] for s in res.snapshots])
    rel = float(np.max(np.abs(vals - vals[0])) / abs(vals[0]))
    return rel <= 1e-4, f"max relative drift = {rel:.3g}"


def check_attractivity_threshold():
    t = min_attractive_tf(ExpansionTask(2 * math.pi * 2500, 2 * math.pi * 250, 1e-3, AtomSpecies(),
                                        BeamGeometry(3e-6, 1.06e-6)))
    return 0.30e-3 <= t <= 0.45e-3, f"t_min = {t * 1e3:.5f} ms"


def check_variational():
    details = []
    ok = True
    for g in (1.5, 2.0, math.sqrt(10.0), 10.0):
        a, b = scaling_action_integral("optimal", g, 1e-3), scaling_action_integral("quintic", g, 1e-3)
        ok &= a <= b
        details.append(f"{g:.3g}: {a:.4g} <= {b:.4g}")
    return ok, "; ".join(details)


CHECKS: List[tuple] = [
    ("static longitudinal stationarity", check_static_longitudinal),
    ("static radial stationarity", check_static_radial),
    ("harmonic invariant exactness", check_invariant_exactness),
    ("invariant expectation drift", check_invariant_drift),
    ("attractivity threshold", check_attractivity_threshold),
    ("variational action inequality", check_variational),
]


def run_checks(selected: Callable[[str], bool] = lambda name: True) -> List[CheckResult]:
    out = []
    for name, fn in CHECKS:
        if selected(name):
            passed, detail = fn()
            out.append(CheckResult(name, bool(passed), detail))
    return out
