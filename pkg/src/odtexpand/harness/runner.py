"""Single runs, scenarios and ordered sweeps."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import math
import os
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import PhysicsDomainError
from ..propagators import (FidelityReport, PropagationPlan, ground_state_2d, longitudinal_shape,
                           propagate_3d, propagate_longitudinal, propagate_radial, radial_shape,
                           report, trap_shape_2d)
from ..protocols import make_trajectory
from ..spectral import (Grid1D, Wavefunction2D, default_longitudinal_grid, default_radial_grid,
                        harmonic_eigenstate_z, stationary_state_numeric)
from .config import RunConfig
from .output import RunManifest

WORKERS_ENV = "ODTEXPAND_WORKERS"
DEFAULT_NR_3D = 128
DEFAULT_NZ_3D = 256


@dataclass
class PointResult:
    """Outcome of one sweep point; ``status`` is "ok" or a domain-error class name."""

    axis: str
    protocol: str
    waist_m: float
    n: int
    tf_s: float
    fidelity: float = math.nan
    final_norm: float = math.nan
    min_norm: float = math.nan
    max_leakage: float = math.nan
    max_potential_energy: float = math.nan
    n_steps: int = 0
    dt_s: float = math.nan
    nz: int = 0
    nr: int = 0
    status: str = "ok"
    message: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def report(self) -> FidelityReport:
        return FidelityReport(self.fidelity, self.final_norm, self.min_norm, self.max_leakage,
                              self.max_potential_energy)


def _longitudinal_states(cfg, traj, grid):
    task = traj.task
    if cfg.potential == "harmonic":
        return (harmonic_eigenstate_z(cfg.n, task.omega0_z, grid),
                harmonic_eigenstate_z(cfg.n, task.omegaf_z, grid))
    u = longitudinal_shape(grid.points, traj.geometry)
    psi0, _ = stationary_state_numeric(task.omega0_z**2 * u, grid, cfg.n)
    psif, _ = stationary_state_numeric(task.omegaf_z**2 * u, grid, cfg.n)
    return psi0, psif


def _radial_states(cfg, traj, grid):
    task = traj.task
    u = radial_shape(grid.points, traj.geometry, cfg.potential)
    psi0, _ = stationary_state_numeric(task.omega0_z**2 * u, grid, cfg.n, cfg.nu)
    psif, _ = stationary_state_numeric(task.omegaf_z**2 * u, grid, cfg.n, cfg.nu)
    return psi0, psif


def grids_3d(traj, nr=0, nz=0) -> Tuple[Grid1D, Grid1D]:
    """Radial and longitudinal grids for the coupled run (trap units)."""
    gamma = traj.task.gamma
    ratio = traj.geometry.radial_ratio
    rg = Grid1D.radial(10.0 * math.sqrt(1.0 / ratio) * gamma, nr or DEFAULT_NR_3D)
    zg = Grid1D.longitudinal(10.0 * math.sqrt(0.5) * gamma, nz or DEFAULT_NZ_3D)
    return rg, zg


def states_3d(traj, rg, zg, potential="full", nu=0):
    """Ground states of the initial and final traps by imaginary-time relaxation."""
    task = traj.task
    u = trap_shape_2d(rg.points, zg.points, traj.geometry, potential)
    ur = radial_shape(rg.points, traj.geometry, potential)
    uz = longitudinal_shape(zg.points, traj.geometry, potential)
    out = []
    for w in (task.omega0_z, task.omegaf_z):
        pr, _ = stationary_state_numeric(w**2 * ur, rg, 0, nu)
        pz, _ = stationary_state_numeric(w**2 * uz, zg, 0)
        psi, _ = ground_state_2d(rg, zg, w**2 * u, Wavefunction2D.product(pr, pz), gap=w, nu=nu)
        out.append(psi)
    return tuple(out)


def prepare(cfg: RunConfig):
    """(plan, initial, target) in trap units; raises PhysicsDomainError on invalid physics."""
    task = cfg.task().dimensionless()
    traj = make_trajectory(cfg.protocol, task, allow_repulsive=cfg.allow_repulsive)
    gamma = task.gamma
    dt = None if cfg.dt_s is None else cfg.dt_s * cfg.task().omega0_z
    if cfg.axis == "longitudinal":
        if cfg.nz:
            g0 = default_longitudinal_grid(gamma, cfg.n, gamma, traj.max_omega())
            grid = Grid1D.longitudinal(g0.x_max, cfg.nz)
        else:
            grid = default_longitudinal_grid(gamma, cfg.n, gamma, traj.max_omega())
        plan = PropagationPlan.build(traj, "split-operator-z", z_grid=grid, dt=dt,
                                     steps_per_period=cfg.steps_per_period, potential=cfg.potential)
        psi0, target = _longitudinal_states(cfg, traj, grid)
    elif cfg.axis == "radial":
        ratio = traj.geometry.radial_ratio
        g0 = default_radial_grid(gamma, ratio, cfg.n, gamma, traj.max_omega(radial=True))
        grid = Grid1D.radial(g0.x_max, cfg.nr) if cfg.nr else g0
        plan = PropagationPlan.build(traj, "crank-nicolson-r", r_grid=grid, dt=dt,
                                     steps_per_period=cfg.steps_per_period, potential=cfg.potential,
                                     nu=cfg.nu)
        psi0, target = _radial_states(cfg, traj, grid)
    else:
        if cfg.n != 0:
            raise ValueError("coupled runs start from the ground state (state.n = 0)")
        rg, zg = grids_3d(traj, cfg.nr, cfg.nz)
        plan = PropagationPlan.build(traj, "adi-2d", z_grid=zg, r_grid=rg, dt=dt,
                                     steps_per_period=cfg.steps_per_period, potential=cfg.potential,
                                     nu=cfg.nu)
        psi0, target = states_3d(traj, rg, zg, cfg.potential, cfg.nu)
    return plan, psi0, target


PROPAGATORS = {"longitudinal": propagate_longitudinal, "radial": propagate_radial, "3d": propagate_3d}


def run_point(cfg: RunConfig, observers=None, every=0, keep_states=False) -> PointResult:
    """Propagate one configuration; domain errors propagate to the caller."""
    plan, psi0, target = prepare(cfg)
    res = PROPAGATORS[cfg.axis](psi0, plan, observers=observers, every=every)
    rep = report(res, target)
    w0 = cfg.task().omega0_z
    out = PointResult(
        cfg.axis, cfg.protocol, cfg.waist_m, cfg.n, plan.trajectory.t_final / w0,
        rep.fidelity, rep.final_norm, rep.min_norm, rep.max_leakage, rep.max_potential_energy,
        plan.n_steps, plan.dt / w0,
        plan.z_grid.n_points if plan.z_grid else 0, plan.r_grid.n_points if plan.r_grid else 0)
    if observers:
        out.extras["snapshots"] = res.snapshots
    if keep_states:
        out.extras["initial"] = psi0
        out.extras["final"] = res.state
        out.extras["target"] = target
    return out


def safe_point(cfg: RunConfig) -> PointResult:
    """run_point, turning physics-domain errors into status rows."""
    try:
        return run_point(cfg)
    except PhysicsDomainError as exc:
        return PointResult(cfg.axis, cfg.protocol, cfg.waist_m, cfg.n, cfg.tf_s,
                           status=type(exc).__name__, message=str(exc))


def worker_budget(default=1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return default
    n = int(raw)
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be >= 1")
    return n


class SweepPointError(RuntimeError):
    pass


def _call(args):
    fn, idx, point = args
    try:
        return fn(point)
    except Exception as exc:  # re-raised with the point attached
        raise SweepPointError(f"sweep point {idx} ({point!r}) failed: {exc}") from exc


def sweep_parallel(fn: Callable, points: Sequence, workers: Optional[int] = None) -> list:
    """fn over points, results in input order; identical for any worker count."""
    workers = worker_budget() if workers is None else workers
    jobs = [(fn, i, p) for i, p in enumerate(points)]
    if workers <= 1 or len(points) <= 1:
        return [_call(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, jobs))


@dataclass(frozen=True)
class Scenario:
    """A sweep over waists, levels and final times around a base configuration."""

    name: str
    base: RunConfig
    waists: Tuple[float, ...] = (3e-6,)
    levels: Tuple[int, ...] = (0,)
    tf_grid: Tuple[float, ...] = (1e-3,)

    def __post_init__(self):
        for label, seq in (("waists", self.waists), ("levels", self.levels), ("tf_grid", self.tf_grid)):
            if len(seq) == 0:
                raise ValueError(f"{label} must not be empty")
            if any(b <= a for a, b in zip(seq[:-1], seq[1:])):
                raise ValueError(f"{label} must be strictly increasing")
        if any(w <= 0 for w in self.waists) or any(t <= 0 for t in self.tf_grid):
            raise ValueError("waists and final times must be positive")

    def points(self) -> List[RunConfig]:
        return [self.base.with_(waist_m=w, n=n, tf_s=tf)
                for w in self.waists for n in self.levels for tf in self.tf_grid]


def scenario_manifest(s: Scenario, results: Sequence[PointResult]) -> RunManifest:
    u = s.base.task().units()
    rows = []
    for cfg, r in zip(s.points(), results):
        d = asdict(r)
        d.pop("extras")
        d["config"] = cfg.as_dotted()
        rows.append(d)
    return RunManifest(s.name, {"base": s.base.as_dotted(), "waists": list(s.waists),
                                "levels": list(s.levels), "tf_grid": list(s.tf_grid)},
                       {"time_s": u.time, "length_m": u.length, "energy_J": u.energy}, rows)


def run_scenario(s: Scenario, workers: Optional[int] = None):
    """(list of PointResult, RunManifest); domain errors become status rows."""
    results = sweep_parallel(safe_point, s.points(), workers)
    return results, scenario_manifest(s, results)


RESULT_COLUMNS = ("axis", "protocol", "waist_m", "n", "tf_s", "fidelity", "final_norm", "min_norm",
                  "max_leakage", "max_potential_energy_trap", "n_steps", "dt_s", "nz", "nr", "status")


def result_row(r: PointResult):
    return (r.axis, r.protocol, r.waist_m, r.n, r.tf_s, r.fidelity, r.final_norm, r.min_norm,
            r.max_leakage, r.max_potential_energy, r.n_steps, r.dt_s, r.nz, r.nr, r.status)


def log_tf_grid(lo=0.2e-3, hi=3e-3, count=31) -> Tuple[float, ...]:
    return tuple(float(x) for x in np.geomspace(lo, hi, count))
