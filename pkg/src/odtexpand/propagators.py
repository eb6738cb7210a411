"""Time-dependent Schroedinger solvers in trap units (hbar = m = 1).

* longitudinal: Strang split-operator with an FFT kinetic factor,
* radial: Crank-Nicolson (Cayley form) on the sqrt(r)-transformed equation,
* coupled (r, z): symmetric potential splitting around an alternating-direction
  implicit Crank-Nicolson kinetic step, tridiagonal in each direction.

The trap potential factorises as V(x, t) = omega_z(t)^2 * U(x), so each step
only needs omega_z^2 at the step midpoint.
"""
from dataclasses import dataclass, field
import math
from typing import Callable, Dict, Optional

import numpy as np
from scipy.linalg import lapack
from scipy import sparse
from scipy.sparse.linalg import splu

from . import _kernels
from .errors import DomainTooSmallError, GridMismatchError, PhysicsDomainError
from .protocols import FrequencyTrajectory
from .spectral import (Grid1D, Wavefunction1D, Wavefunction2D, kinetic_tridiagonal,
                       overlap, quadrature_weights)

SCHEMES = ("split-operator-z", "crank-nicolson-r", "adi-2d")
LEAKAGE_TOL = 1e-6
CHECK_EVERY = 16


def longitudinal_shape(z, geometry, kind="full"):
    """U(z) with V = omega_z^2 U on the axis r = 0."""
    z = np.asarray(z, dtype=float)
    zr = geometry.rayleigh
    if kind == "harmonic":
        return 0.5 * z**2
    q = (z / zr) ** 2
    return 0.5 * zr**2 * q / (1.0 + q)


def radial_shape(r, geometry, kind="full"):
    """U(r) with V = omega_z^2 U in the plane z = 0 (centrifugal term excluded)."""
    r = np.asarray(r, dtype=float)
    if kind == "harmonic":
        return 0.5 * geometry.radial_ratio**2 * r**2
    return -0.5 * geometry.rayleigh**2 * np.expm1(-2.0 * r**2 / geometry.waist**2)


def trap_shape_2d(r, z, geometry, kind="full"):
    r = np.asarray(r, dtype=float)[:, None]
    z = np.asarray(z, dtype=float)[None, :]
    if kind == "harmonic":
        return 0.5 * (z**2 + geometry.radial_ratio**2 * r**2)
    zr = geometry.rayleigh
    q = (z / zr) ** 2
    a = 2.0 * r**2 / (geometry.waist**2 * (1.0 + q))
    return 0.5 * zr**2 * (q - np.expm1(-a)) / (1.0 + q)


def step_schedule(t_final, dt, breakpoints=()):
    """Step boundaries covering [0, t_final] with every breakpoint on a boundary."""
    edges = sorted({0.0, float(t_final)} | {float(b) for b in breakpoints if 0.0 < b < t_final})
    parts = []
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, int(math.ceil((b - a) / dt - 1e-9)))
        parts.append(np.linspace(a, b, n + 1)[:-1])
    parts.append(np.array([edges[-1]]))
    return np.concatenate(parts)


@dataclass(frozen=True)
class PropagationPlan:
    trajectory: FrequencyTrajectory
    scheme: str
    steps: np.ndarray
    dt: float
    z_grid: Optional[Grid1D] = None
    r_grid: Optional[Grid1D] = None
    potential: str = "full"
    nu: int = 0

    @classmethod
    def build(cls, trajectory: FrequencyTrajectory, scheme: str, z_grid=None, r_grid=None,
              dt=None, steps_per_period=200, potential="full", nu=0):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        if potential not in ("full", "harmonic"):
            raise ValueError("potential must be 'full' or 'harmonic'")
        radial = scheme != "split-operator-z"
        w_max = trajectory.max_omega(radial=radial)
        if scheme == "adi-2d":
            w_max = max(w_max, trajectory.max_omega())
        dt_max = 2.0 * math.pi / w_max / 50.0
        if dt is None:
            dt = 2.0 * math.pi / w_max / steps_per_period
        if dt > dt_max * (1 + 1e-12):
            raise ValueError(f"dt = {dt:.4g} exceeds 1/50 of the shortest trap period")
        if scheme in ("split-operator-z", "adi-2d") and z_grid is None:
            raise ValueError("scheme needs a longitudinal grid")
        if scheme in ("crank-nicolson-r", "adi-2d") and r_grid is None:
            raise ValueError("scheme needs a radial grid")
        steps = step_schedule(trajectory.t_final, dt, trajectory.breakpoints)
        return cls(trajectory, scheme, steps, float(dt), z_grid, r_grid, potential, int(nu))

    @property
    def n_steps(self) -> int:
        return len(self.steps) - 1

    def omega_sq_midpoints(self):
        mid = 0.5 * (self.steps[1:] + self.steps[:-1])
        return np.asarray(self.trajectory.omega_z_sq(mid)), np.diff(self.steps)


@dataclass
class PropagationResult:
    state: object
    final_norm: float
    min_norm: float
    max_leakage: float
    max_potential_energy: float
    n_steps: int
    snapshots: list = field(default_factory=list)


@dataclass(frozen=True)
class FidelityReport:
    fidelity: float
    final_norm: float
    min_norm: float
    max_leakage: float
    max_potential_energy: float

    def __post_init__(self):
        if self.fidelity > 1.0 + 1e-9:
            raise PhysicsDomainError(f"fidelity {self.fidelity} exceeds one")


def fidelity(a, b) -> float:
    """|<a|b>|."""
    return abs(overlap(a, b))


def report(result: PropagationResult, target) -> FidelityReport:
    return FidelityReport(fidelity(target, result.state), result.final_norm, result.min_norm,
                          result.max_leakage, result.max_potential_energy)


class _Monitor:
    def __init__(self, weights, shape_u, observers, every, leak_tol):
        self.weights = weights
        self.shape_u = shape_u
        self.observers = observers or {}
        self.every = every
        self.leak_tol = leak_tol
        self.min_norm = math.inf
        self.max_norm_seen = 0.0
        self.max_leak = 0.0
        self.max_pot = -math.inf
        self.snapshots = []

    def check(self, samples, boundary, w2, t):
        dens = np.abs(samples) ** 2
        norm2 = float(np.sum(self.weights * dens))
        self.min_norm = min(self.min_norm, math.sqrt(norm2))
        leak = float(boundary(dens))
        self.max_leak = max(self.max_leak, leak)
        self.max_pot = max(self.max_pot, w2 * float(np.sum(self.weights * self.shape_u * dens)) / norm2)
        if leak > self.leak_tol:
            raise DomainTooSmallError(
                f"boundary density {leak:.3g} exceeds {self.leak_tol:.1g} at t = {t:.6g}")

    def snapshot(self, t, state):
        if self.observers:
            row = {"t": t}
            row.update({name: f(t, state) for name, f in self.observers.items()})
            self.snapshots.append(row)


def _observe(monitor, step, n_steps, t, make_state):
    if monitor.observers and (step == n_steps or (monitor.every and step % monitor.every == 0)):
        monitor.snapshot(t, make_state())


def propagate_longitudinal(initial: Wavefunction1D, plan: PropagationPlan,
                           observers: Optional[Dict[str, Callable]] = None, every: int = 0,
                           leak_tol: float = LEAKAGE_TOL) -> PropagationResult:
    """Strang split-operator: exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2), V at the step midpoint."""
    if plan.scheme != "split-operator-z":
        raise ValueError("plan is not a split-operator plan")
    grid = plan.z_grid
    if initial.grid != grid:
        raise GridMismatchError("initial state is not on the plan grid")
    u = longitudinal_shape(grid.points, plan.trajectory.geometry, plan.potential)
    k2 = 0.5 * grid.wavenumbers() ** 2
    w2s, dts = plan.omega_sq_midpoints()
    weights = quadrature_weights(grid)
    mon = _Monitor(weights, u, observers, every, leak_tol)

    def edge(d):
        return max(d[0], d[-1])

    psi = initial.samples.copy()
    kin_cache = {}
    _observe(mon, 0, plan.n_steps, plan.steps[0], lambda: Wavefunction1D(grid, psi.copy()))
    for i, (w2, dt) in enumerate(zip(w2s, dts)):
        key = round(dt / plan.dt, 12)
        kin = kin_cache.get(key)
        if kin is None:
            kin = kin_cache[key] = np.exp(-1j * dt * k2)
        half = np.exp(-0.5j * dt * w2 * u)
        psi = half * np.fft.ifft(kin * np.fft.fft(half * psi))
        if i % CHECK_EVERY == 0 or i == plan.n_steps - 1:
            mon.check(psi, edge, w2, plan.steps[i + 1])
        _observe(mon, i + 1, plan.n_steps, plan.steps[i + 1], lambda: Wavefunction1D(grid, psi.copy()))
    final = Wavefunction1D(grid, psi)
    return PropagationResult(final, final.norm, mon.min_norm, mon.max_leak, mon.max_pot,
                             plan.n_steps, mon.snapshots)


def propagate_radial(initial: Wavefunction1D, plan: PropagationPlan,
                     observers: Optional[Dict[str, Callable]] = None, every: int = 0,
                     leak_tol: float = LEAKAGE_TOL) -> PropagationResult:
    """Crank-Nicolson (1 + i dt H/2) psi' = (1 - i dt H/2) psi with psi(0) = 0."""
    if plan.scheme != "crank-nicolson-r":
        raise ValueError("plan is not a Crank-Nicolson radial plan")
    grid = plan.r_grid
    if initial.grid != grid:
        raise GridMismatchError("initial state is not on the plan grid")
    diag0, off = kinetic_tridiagonal(grid, plan.nu)
    u = radial_shape(grid.points, plan.trajectory.geometry, plan.potential)
    w2s, dts = plan.omega_sq_midpoints()
    weights = quadrature_weights(grid)
    mon = _Monitor(weights, u, observers, every, leak_tol)

    def edge(d):
        return d[-1]

    psi = initial.samples.copy()
    _observe(mon, 0, plan.n_steps, plan.steps[0], lambda: Wavefunction1D(grid, psi.copy()))
    for i, (w2, dt) in enumerate(zip(w2s, dts)):
        h = 0.5j * dt
        diag = diag0 + w2 * u
        offc = h * off
        rhs = (1.0 - h * diag) * psi
        rhs[:-1] -= offc * psi[1:]
        rhs[1:] -= offc * psi[:-1]
        _, _, _, x, info = lapack.zgtsv(offc, 1.0 + h * diag, offc, rhs[:, None])
        if info != 0:
            raise PhysicsDomainError(f"tridiagonal solve failed (info = {info})")
        psi = x[:, 0]
        if i % CHECK_EVERY == 0 or i == plan.n_steps - 1:
            mon.check(psi, edge, w2, plan.steps[i + 1])
        _observe(mon, i + 1, plan.n_steps, plan.steps[i + 1], lambda: Wavefunction1D(grid, psi.copy()))
    final = Wavefunction1D(grid, psi)
    return PropagationResult(final, final.norm, mon.min_norm, mon.max_leak, mon.max_pot,
                             plan.n_steps, mon.snapshots)


class _CayleyFactor:
    """LU factors of (1 + i dt T/2) for a constant real tridiagonal T."""

    def __init__(self, diag, off, dt):
        h = 0.5j * dt
        self.h = h
        self.diag = diag
        self.off = off
        dl, d, du, du2, ipiv, info = lapack.zgttrf(h * off, 1.0 + h * diag, h * off)
        if info != 0:
            raise PhysicsDomainError("singular Crank-Nicolson matrix")
        self.lu = (dl, d, du, du2, ipiv)

    def apply(self, x):
        """(1 + iT dt/2)^-1 (1 - iT dt/2) along axis 0 of a 2D array."""
        h = self.h
        rhs = (1.0 - h * self.diag)[:, None] * x
        rhs[:-1] -= h * self.off[:, None] * x[1:]
        rhs[1:] -= h * self.off[:, None] * x[:-1]
        out, info = lapack.zgttrs(*self.lu, rhs, overwrite_b=1)
        if info != 0:
            raise PhysicsDomainError("tridiagonal back-substitution failed")
        return out


def _chunks(plan: PropagationPlan, every: int):
    """Runs of steps [start, stop) sharing one step size, cut at checks and observations."""
    keys = np.round(np.diff(plan.steps) / plan.dt, 12)
    start = 0
    for i in range(plan.n_steps):
        done = i + 1
        cut = (done % CHECK_EVERY == 0 or done == plan.n_steps
               or (every and done % every == 0) or keys[i] != keys[min(done, plan.n_steps - 1)])
        if cut:
            yield start, done
            start = done


def propagate_3d(initial: Wavefunction2D, plan: PropagationPlan,
                 observers: Optional[Dict[str, Callable]] = None, every: int = 0,
                 leak_tol: float = LEAKAGE_TOL, engine: str = "auto") -> PropagationResult:
    """exp(-iV dt/2) . CN_z . CN_r . exp(-iV dt/2) on the (r, z) grid.

    T_r and T_z commute, so the two implicit half-sweeps form a Peaceman-Rachford
    (ADI) step of the kinetic part. ``engine`` picks the compiled Thomas kernel
    ("compiled") or LAPACK multi-RHS solves ("lapack"); both give the same scheme.
    """
    if plan.scheme != "adi-2d":
        raise ValueError("plan is not an ADI plan")
    if engine == "auto":
        engine = "compiled" if _kernels.HAVE_NUMBA else "lapack"
    if engine not in ("compiled", "lapack"):
        raise ValueError(f"unknown engine {engine!r}")
    rg, zg = plan.r_grid, plan.z_grid
    if initial.r_grid != rg or initial.z_grid != zg:
        raise GridMismatchError("initial state is not on the plan grids")
    u = trap_shape_2d(rg.points, zg.points, plan.trajectory.geometry, plan.potential)
    dr_diag, dr_off = kinetic_tridiagonal(rg, plan.nu)
    dz_diag, dz_off = kinetic_tridiagonal(zg)
    w2s, dts = plan.omega_sq_midpoints()
    weights = np.outer(quadrature_weights(rg), quadrature_weights(zg))
    mon = _Monitor(weights, u, observers, every, leak_tol)

    def edge(d):
        return max(d[-1].max(), d[:, 0].max(), d[:, -1].max())

    factors = {}

    def cayley(dt):
        key = round(dt / plan.dt, 12)
        if key not in factors:
            if engine == "lapack":
                factors[key] = (_CayleyFactor(dr_diag, dr_off, dt), _CayleyFactor(dz_diag, dz_off, dt))
            else:
                h = 0.5 * dt
                factors[key] = tuple((1.0 - 1j * h * d,) + _kernels.thomas_factors(d, o, h)
                                     for d, o in ((dr_diag, dr_off), (dz_diag, dz_off)))
        return factors[key]

    psi = np.ascontiguousarray(initial.samples, dtype=complex).copy()
    work = np.empty_like(psi)
    _observe(mon, 0, plan.n_steps, plan.steps[0], lambda: Wavefunction2D(rg, zg, psi.copy()))
    for start, stop in _chunks(plan, every):
        cr, cz = cayley(dts[start])
        if engine == "compiled":
            _kernels.adi_steps(psi, work, u, 0.5 * dts[start:stop] * w2s[start:stop], cr, cz)
        else:
            for i in range(start, stop):
                half = np.exp(-0.5j * dts[i] * w2s[i] * u)
                psi = half * psi
                psi = cr.apply(np.asfortranarray(psi))
                psi = cz.apply(np.asfortranarray(psi.T)).T
                psi = np.ascontiguousarray(half * psi)
        mon.check(psi, edge, w2s[stop - 1], plan.steps[stop])
        _observe(mon, stop, plan.n_steps, plan.steps[stop], lambda: Wavefunction2D(rg, zg, psi.copy()))
    final = Wavefunction2D(rg, zg, psi)
    return PropagationResult(final, final.norm, mon.min_norm, mon.max_leak, mon.max_pot,
                             plan.n_steps, mon.snapshots)


def hamiltonian_2d(r_grid: Grid1D, z_grid: Grid1D, potential: np.ndarray, nu: int = 0):
    """Sparse finite-difference Hamiltonian on the (r, z) grid, C-ordered (r slow)."""
    dr, offr = kinetic_tridiagonal(r_grid, nu)
    dz, offz = kinetic_tridiagonal(z_grid)
    tr = sparse.diags([offr, dr, offr], [-1, 0, 1])
    tz = sparse.diags([offz, dz, offz], [-1, 0, 1])
    h = sparse.kron(tr, sparse.identity(z_grid.n_points)) + sparse.kron(sparse.identity(r_grid.n_points), tz)
    return (h + sparse.diags(np.asarray(potential).ravel())).tocsc()


def ground_state_2d(r_grid: Grid1D, z_grid: Grid1D, potential: np.ndarray, guess: Wavefunction2D,
                    gap: float, nu: int = 0, tol: float = 1e-10, max_steps: int = 500):
    """Imaginary-time relaxation with implicit (backward-Euler) steps.

    Each step solves (1 + tau (H - E_ref)) psi' = psi and renormalises. E_ref sits half
    a gap below the guess energy and tau = 10 / gap, so excited components shrink by
    roughly a factor 0.4 per step. Stops when the energy changes by less than ``tol``.
    Returns (Wavefunction2D, energy).
    """
    h = hamiltonian_2d(r_grid, z_grid, potential, nu)
    x = guess.samples.ravel().astype(complex)
    # uniform weights match the discrete Hamiltonian's inner product
    w = r_grid.spacing * z_grid.spacing

    def energy(v):
        return float(np.real(np.vdot(v, h @ v)) / np.real(np.vdot(v, v)))

    e = energy(x)
    e_ref = e - 0.5 * gap
    tau = 10.0 / gap
    lu = splu((sparse.identity(h.shape[0], format="csc") + tau * (h - e_ref * sparse.identity(h.shape[0]))).tocsc())
    for _ in range(max_steps):
        x = lu.solve(x.real) + 1j * lu.solve(x.imag) if np.iscomplexobj(x) else lu.solve(x)
        x /= math.sqrt(np.real(np.vdot(x, x)) * w)
        e_new = energy(x)
        if abs(e_new - e) < tol:
            e = e_new
            break
        e = e_new
    else:
        raise PhysicsDomainError("imaginary-time relaxation did not converge")
    samples = x.reshape(r_grid.n_points, z_grid.n_points)
    j = np.unravel_index(np.argmax(np.abs(samples)), samples.shape)
    samples = samples * (abs(samples[j]) / samples[j])
    return Wavefunction2D(r_grid, z_grid, samples).normalized(), e
