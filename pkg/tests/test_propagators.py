import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import make_task
from odtexpand import _kernels
from odtexpand.errors import DomainTooSmallError, PhysicsDomainError
from odtexpand.harness.checks import static_trajectory
from odtexpand.propagators import (FidelityReport, PropagationPlan, fidelity, ground_state_2d,
                                   longitudinal_shape, propagate_3d, propagate_longitudinal, propagate_radial,
                                   radial_shape, step_schedule, trap_shape_2d)
from odtexpand.protocols import bang_bang, invariant_protocol
from odtexpand.spectral import (ExpandingModeSpec, Grid1D, Wavefunction2D, default_longitudinal_grid,
                                expanding_mode, harmonic_eigenstate_z, stationary_state_numeric)
from odtexpand.trap_model import shape_function


@given(st.floats(1.0, 50.0), st.floats(0.01, 0.7))
def test_step_schedule_hits_breakpoints(tf, frac):
    bp = frac * tf
    steps = step_schedule(tf, 0.13, (0.0, bp, tf))
    assert steps[0] == 0.0 and steps[-1] == tf
    assert np.any(np.isclose(steps, bp, rtol=0, atol=1e-12))
    assert np.all(np.diff(steps) <= 0.13 * (1 + 1e-9))


def test_plan_rejects_coarse_steps(task_trap):
    traj = invariant_protocol(task_trap)
    g = Grid1D.longitudinal(20.0, 256)
    with pytest.raises(ValueError):
        PropagationPlan.build(traj, "split-operator-z", z_grid=g, dt=0.2)
    with pytest.raises(ValueError):
        PropagationPlan.build(traj, "crank-nicolson-r", z_grid=g)
    with pytest.raises(ValueError):
        PropagationPlan.build(traj, "leapfrog", z_grid=g)


def test_shapes_agree_with_trap_model(task_trap):
    geom = task_trap.geometry
    r = np.linspace(0.01, 3 * geom.waist, 7)
    z = np.linspace(-2 * geom.rayleigh, 2 * geom.rayleigh, 5)
    # V0 = omega^2 z_R^2 / 2 in trap units
    full = trap_shape_2d(r, z, geom)
    assert np.allclose(full, 0.5 * geom.rayleigh**2 * shape_function(r[:, None], z[None, :], geom), rtol=1e-12)
    assert np.allclose(full[:, 2], radial_shape(r, geom), rtol=1e-12)
    assert np.allclose(trap_shape_2d([1e-300], z, geom)[0], longitudinal_shape(z, geom), rtol=1e-12)


def test_fidelity_report_rejects_overshoot():
    with pytest.raises(PhysicsDomainError):
        FidelityReport(1.0 + 1e-6, 1, 1, 0, 0)
    FidelityReport(1.0 + 1e-12, 1, 1, 0, 0)


def test_longitudinal_follows_expanding_mode(task_trap):
    traj = invariant_protocol(task_trap)
    g = default_longitudinal_grid(task_trap.gamma, 1, task_trap.gamma, traj.max_omega())
    plan = PropagationPlan.build(traj, "split-operator-z", z_grid=g, potential="harmonic")

    def mode(t, psi):
        b, bd, _, _ = traj.scaling.time_derivatives(t)
        return fidelity(expanding_mode(ExpandingModeSpec(1, 1.0, float(b), float(bd)), g), psi)

    res = propagate_longitudinal(harmonic_eigenstate_z(1, 1.0, g), plan, observers={"mode": mode},
                                 every=plan.n_steps // 8)
    assert min(s["mode"] for s in res.snapshots) >= 1 - 1e-7
    assert abs(res.final_norm - 1.0) <= 1e-10
    assert fidelity(harmonic_eigenstate_z(1, task_trap.omegaf_z, g), res.state) >= 1 - 1e-8


def test_radial_static_state_is_stationary(task_trap):
    ratio = task_trap.geometry.radial_ratio
    traj = static_trajectory(task_trap, 4 * math.pi / ratio)
    g = Grid1D.radial(3.0, 256)
    psi, _ = stationary_state_numeric(radial_shape(g.points, task_trap.geometry), g, 1)
    res = propagate_radial(psi, PropagationPlan.build(traj, "crank-nicolson-r", r_grid=g))
    assert fidelity(psi, res.state) >= 1 - 1e-10
    assert abs(res.final_norm - 1.0) <= 1e-10


def test_bang_bang_is_exact_for_harmonic_trap(task_trap):
    traj = bang_bang(task_trap)
    g = default_longitudinal_grid(task_trap.gamma, 0, task_trap.gamma, 1.0)
    plan = PropagationPlan.build(traj, "split-operator-z", z_grid=g, potential="harmonic", steps_per_period=400)
    res = propagate_longitudinal(harmonic_eigenstate_z(0, 1.0, g), plan)
    assert fidelity(harmonic_eigenstate_z(0, task_trap.omegaf_z, g), res.state) >= 1 - 1e-6


def test_small_domain_is_reported(task_trap):
    traj = invariant_protocol(task_trap)
    g = Grid1D.longitudinal(8.0, 128)
    plan = PropagationPlan.build(traj, "split-operator-z", z_grid=g, potential="harmonic")
    with pytest.raises(DomainTooSmallError):
        propagate_longitudinal(harmonic_eigenstate_z(0, 1.0, g), plan)


def _small_3d(task, potential="full", steps_per_period=60):
    traj = invariant_protocol(task)
    ratio = task.geometry.radial_ratio
    rg = Grid1D.radial(10 * math.sqrt(1 / ratio) * task.gamma, 32)
    zg = Grid1D.longitudinal(10 * math.sqrt(0.5) * task.gamma, 64)
    plan = PropagationPlan.build(traj, "adi-2d", z_grid=zg, r_grid=rg, potential=potential,
                                 steps_per_period=steps_per_period)
    u = trap_shape_2d(rg.points, zg.points, task.geometry, potential)
    pr, _ = stationary_state_numeric(radial_shape(rg.points, task.geometry, potential), rg, 0)
    pz, _ = stationary_state_numeric(longitudinal_shape(zg.points, task.geometry, potential), zg, 0)
    psi0, e0 = ground_state_2d(rg, zg, u, Wavefunction2D.product(pr, pz), gap=1.0)
    return plan, psi0, e0


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="compiled kernel unavailable")
def test_adi_engines_agree():
    plan, psi0, _ = _small_3d(make_task(1e-3).dimensionless())
    a = propagate_3d(psi0, plan, engine="compiled")
    b = propagate_3d(psi0, plan, engine="lapack")
    assert np.max(np.abs(a.state.samples - b.state.samples)) <= 1e-11
    assert abs(a.final_norm - 1.0) <= 1e-9


def test_ground_state_2d_separable_energy():
    task = make_task().dimensionless()
    geom = task.geometry
    rg = Grid1D.radial(2.0, 48)
    zg = Grid1D.longitudinal(7.0, 96)
    u = trap_shape_2d(rg.points, zg.points, geom, "harmonic")
    pr, er = stationary_state_numeric(radial_shape(rg.points, geom, "harmonic"), rg, 0)
    pz, ez = stationary_state_numeric(longitudinal_shape(zg.points, geom, "harmonic"), zg, 0)
    # a product guess of the wrong widths; relaxation must fix the shape
    guess = Wavefunction2D(rg, zg, np.outer(np.sqrt(rg.points) * np.exp(-4.0 * rg.points**2),
                                            np.exp(-0.3 * zg.points**2)))
    psi, e = ground_state_2d(rg, zg, u, guess, gap=1.0)
    assert e == pytest.approx(er + ez, abs=1e-8)
    assert fidelity(Wavefunction2D.product(pr, pz), psi) >= 1 - 1e-8
