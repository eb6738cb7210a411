"""Grids, wavefunctions, analytic and numeric eigenstates, expanding modes.

Everything here is in trap units (hbar = m = 1). Radial wavefunctions are the
sqrt(r)-transformed amplitudes psi = sqrt(r) F(r), sampled on r_i = i*dr,
i = 1..N, with the implicit node psi(0) = 0.
"""
from dataclasses import dataclass
import math
from typing import Callable, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import eval_genlaguerre

from .errors import GridMismatchError, GridTruncationError, OutOfSpectrumError

TRUNCATION_TOL = 1e-8


@dataclass(frozen=True)
class Grid1D:
    n_points: int
    x_min: float
    x_max: float
    axis: str = "z"

    def __post_init__(self):
        if self.n_points < 16:
            raise ValueError("a grid needs at least 16 points")
        if not self.x_max > self.x_min:
            raise ValueError("empty grid extent")
        if self.axis not in ("z", "r"):
            raise ValueError("axis must be 'z' or 'r'")
        if self.axis == "r":
            dr = self.x_max / self.n_points
            if abs(self.x_min - dr) > 1e-12 * self.x_max:
                raise ValueError("radial grids start at r = dr")

    @classmethod
    def longitudinal(cls, half_width, n_points):
        return cls(int(n_points), -float(half_width), float(half_width), "z")

    @classmethod
    def radial(cls, r_max, n_points):
        n = int(n_points)
        return cls(n, float(r_max) / n, float(r_max), "r")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def is_radial(self) -> bool:
        return self.axis == "r"

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)


def quadrature_weights(grid: Grid1D) -> np.ndarray:
    """Trapezoid weights; radial grids carry the implicit zero node at r = 0."""
    w = np.full(grid.n_points, grid.spacing)
    w[-1] *= 0.5
    if not grid.is_radial:
        w[0] *= 0.5
    return w


def _integrate(values, grid: Grid1D):
    return np.dot(quadrature_weights(grid), values)


@dataclass
class Wavefunction1D:
    grid: Grid1D
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != (self.grid.n_points,):
            raise GridMismatchError("samples do not match the grid")

    @property
    def norm(self) -> float:
        return math.sqrt(_integrate(np.abs(self.samples) ** 2, self.grid))

    def normalized(self) -> "Wavefunction1D":
        return Wavefunction1D(self.grid, self.samples / self.norm)

    def density(self):
        return np.abs(self.samples) ** 2

    def expectation(self, values) -> float:
        return float(_integrate(np.asarray(values) * self.density(), self.grid))

    def boundary_amplitude(self) -> float:
        a = np.abs(self.samples)
        return float(a[-1]) if self.grid.is_radial else float(max(a[0], a[-1]))

    def copy(self):
        return Wavefunction1D(self.grid, self.samples.copy())


@dataclass
class Wavefunction2D:
    r_grid: Grid1D
    z_grid: Grid1D
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != (self.r_grid.n_points, self.z_grid.n_points):
            raise GridMismatchError("samples do not match the (r, z) grids")
        if not self.r_grid.is_radial or self.z_grid.is_radial:
            raise GridMismatchError("expected a radial and a longitudinal grid")

    def _integrate(self, values):
        return quadrature_weights(self.r_grid) @ values @ quadrature_weights(self.z_grid)

    @property
    def norm(self) -> float:
        return math.sqrt(self._integrate(np.abs(self.samples) ** 2))

    def normalized(self) -> "Wavefunction2D":
        return Wavefunction2D(self.r_grid, self.z_grid, self.samples / self.norm)

    @classmethod
    def product(cls, radial: Wavefunction1D, longitudinal: Wavefunction1D):
        return cls(radial.grid, longitudinal.grid,
                   np.outer(radial.samples, longitudinal.samples)).normalized()

    def boundary_amplitude(self) -> float:
        a = np.abs(self.samples)
        return float(max(a[-1].max(), a[:, 0].max(), a[:, -1].max()))


Wavefunction = Union[Wavefunction1D, Wavefunction2D]


def overlap(a: Wavefunction, b: Wavefunction) -> complex:
    """<a|b> by trapezoid quadrature."""
    if isinstance(a, Wavefunction2D) != isinstance(b, Wavefunction2D):
        raise GridMismatchError("cannot overlap 1D and 2D states")
    if isinstance(a, Wavefunction2D):
        if a.r_grid != b.r_grid or a.z_grid != b.z_grid:
            raise GridMismatchError("states live on different grids")
        return complex(a._integrate(np.conj(a.samples) * b.samples))
    if a.grid != b.grid:
        raise GridMismatchError("states live on different grids")
    return complex(_integrate(np.conj(a.samples) * b.samples, a.grid))


def _check_truncation(psi: Wavefunction1D, what: str):
    peak = float(np.max(np.abs(psi.samples)))
    if psi.boundary_amplitude() > TRUNCATION_TOL * max(peak, 1.0):
        raise GridTruncationError(f"{what} is truncated by the grid boundary")


def hermite_functions(n_max, y):
    """Normalized Hermite functions h_0..h_n_max at y (stable recurrence)."""
    y = np.asarray(y, dtype=float)
    out = np.empty((n_max + 1,) + y.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * y**2)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * y * out[0]
    for k in range(1, n_max):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * y * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def harmonic_eigenstate_z(n: int, omega: float, grid: Grid1D, check=True) -> Wavefunction1D:
    """n-th oscillator eigenstate, energy (n + 1/2) omega."""
    y = math.sqrt(omega) * grid.points
    psi = Wavefunction1D(grid, omega**0.25 * hermite_functions(n, y)[n])
    if check:
        _check_truncation(psi, f"harmonic level {n}")
    return psi


def radial_eigenstate(k: int, omega_r: float, grid: Grid1D, check=True) -> Wavefunction1D:
    """nu = 0 radial level k: sqrt(2 w r) exp(-w r^2/2) L_k(w r^2), energy (2k + 1) omega_r."""
    if not grid.is_radial:
        raise GridMismatchError("radial eigenstates need a radial grid")
    r = grid.points
    x = omega_r * r**2
    psi = Wavefunction1D(grid, np.sqrt(2.0 * omega_r * r) * np.exp(-0.5 * x) * eval_genlaguerre(k, 0, x)).normalized()
    if check:
        _check_truncation(psi, f"radial level {k}")
    return psi


def radial_kinetic_tridiagonal(grid: Grid1D, nu: int = 0):
    """Kinetic plus centrifugal operator for psi = sqrt(r) F as a symmetric tridiagonal.

    A conservative (flux-form) discretisation of -(1/2r) d/dr(r d/dr) + nu^2/(2r^2),
    symmetrised by the sqrt(r) transform. It carries the -1/(8r^2) term implicitly and
    converges at second order, unlike a plain three-point stencil plus -1/(8r^2).
    """
    dr = grid.spacing
    r = grid.points
    r_out = r + 0.5 * dr
    r_in = r - 0.5 * dr
    if nu == 0:
        r_in[0] = 0.0
    diag = (r_out + r_in) / (2.0 * r * dr**2) + nu**2 / (2.0 * r**2)
    off = -0.5 / dr**2 * r_out[:-1] / np.sqrt(r[:-1] * r[1:])
    return diag, off


def longitudinal_kinetic_tridiagonal(grid: Grid1D):
    dz = grid.spacing
    n = grid.n_points
    return np.full(n, 1.0 / dz**2), np.full(n - 1, -0.5 / dz**2)


def kinetic_tridiagonal(grid: Grid1D, nu: int = 0):
    return radial_kinetic_tridiagonal(grid, nu) if grid.is_radial else longitudinal_kinetic_tridiagonal(grid)


def _first_antinode_sign(v):
    a = np.abs(v)
    scale = a.max()
    for i in range(1, len(v) - 1):
        if a[i] >= a[i - 1] and a[i] >= a[i + 1] and a[i] > 1e-3 * scale:
            return 1.0 if v[i] >= 0 else -1.0
    return 1.0 if v[int(np.argmax(a))] >= 0 else -1.0


def stationary_state_numeric(potential: Union[Callable, np.ndarray], grid: Grid1D, n: int,
                             nu: int = 0):
    """n-th eigenpair of the finite-difference Hamiltonian on ``grid``.

    Returns (Wavefunction1D, energy). The eigenvector is normalised and signed so
    that its first antinode is positive.
    """
    x = grid.points
    v = np.asarray(potential(x) if callable(potential) else potential, dtype=float)
    diag, off = kinetic_tridiagonal(grid, nu)
    energies, vecs = eigh_tridiagonal(diag + v, off, select="i", select_range=(0, n))
    energy = float(energies[n])
    edge = v[-1] if grid.is_radial else min(v[0], v[-1])
    if energy >= edge:
        raise OutOfSpectrumError(f"level {n} (E = {energy:.6g}) is not bound on this grid")
    vec = vecs[:, n] * _first_antinode_sign(vecs[:, n])
    psi = Wavefunction1D(grid, vec / math.sqrt(grid.spacing))
    return psi.normalized(), energy


def tridiagonal_expectation(psi: Wavefunction1D, diag, off) -> float:
    s = psi.samples
    hs = diag * s
    hs[:-1] += off * s[1:]
    hs[1:] += off * s[:-1]
    return float(np.real(np.sum(np.conj(s) * hs)) * psi.grid.spacing)


@dataclass(frozen=True)
class ExpandingModeSpec:
    level: int
    omega0: float
    b: float
    bdot: float = 0.0
    phase_integral: float = 0.0

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("scaling factor must be positive")
        if self.phase_integral < 0:
            raise ValueError("phase integral is accumulated forward in time")


def expanding_mode(spec: ExpandingModeSpec, grid: Grid1D) -> Wavefunction1D:
    """Invariant eigenstate with its Lewis-Riesenfeld phase.

    psi_n(z) = exp(i bdot z^2/(2b)) / sqrt(b) * h_n(sqrt(w0) z / b) w0^(1/4)
               * exp(-i (n + 1/2) w0 * phase_integral)
    """
    z = grid.points
    n, w0, b = spec.level, spec.omega0, spec.b
    h = w0**0.25 * hermite_functions(n, math.sqrt(w0) * z / b)[n] / math.sqrt(b)
    phase = np.exp(0.5j * spec.bdot * z**2 / b - 1j * (n + 0.5) * w0 * spec.phase_integral)
    return Wavefunction1D(grid, h * phase)


def radial_expanding_mode(k: int, omega0_r: float, b: float, bdot: float, grid: Grid1D) -> Wavefunction1D:
    """nu = 0 radial invariant eigenstate (global phase dropped)."""
    base = radial_eigenstate(k, omega0_r, Grid1D(grid.n_points, grid.x_min / b, grid.x_max / b, "r"),
                             check=False)
    r = grid.points
    return Wavefunction1D(grid, base.samples / math.sqrt(b) * np.exp(0.5j * bdot * r**2 / b))


def _spectral_derivative(psi: Wavefunction1D):
    k = psi.grid.wavenumbers()
    return np.fft.ifft(1j * k * np.fft.fft(psi.samples))


def invariant_expectation(psi: Wavefunction1D, b: float, bdot: float, omega0: float) -> float:
    """<I> for I = b^2 p^2/2 - b bdot (zp + pz)/2 + bdot^2 z^2/2 + omega0^2 z^2/(2 b^2)."""
    if psi.grid.is_radial:
        raise GridMismatchError("the invariant is defined on the longitudinal axis")
    z = psi.grid.points
    dpsi = _spectral_derivative(psi)
    p_psi = -1j * dpsi
    p2 = _integrate(np.abs(p_psi) ** 2, psi.grid)
    # <zp + pz> = 2 Re <z psi | p psi>
    zp_real = _integrate(np.conj(z * psi.samples) * p_psi, psi.grid).real
    z2 = psi.expectation(z**2)
    norm2 = psi.norm**2
    value = 0.5 * b**2 * p2 - b * bdot * zp_real + 0.5 * (bdot**2 + omega0**2 / b**2) * z2
    return float(value / norm2)


def scaled_extent(n: int, omega: float, stretch: float = 1.0, factor: float = 10.0) -> float:
    """Half-width covering level n of an oscillator of frequency omega stretched by b."""
    return factor * math.sqrt((n + 0.5) / omega) * max(1.0, stretch)


def _pow2_at_least(n):
    return 1 << max(int(math.ceil(math.log2(max(n, 1)))), 4)


def default_longitudinal_grid(gamma: float, n: int = 0, b_max: float = 1.0, omega_max: float = 1.0,
                              min_points: int = 1024, resolution: float = 0.15) -> Grid1D:
    """Longitudinal grid for an expansion from omega0 = 1 by gamma^2.

    Half-width 10 sqrt(n + 1/2) max(gamma, b_max); spacing at most
    resolution / sqrt((2n + 1) omega_max), rounded up to a power of two.
    """
    half = scaled_extent(n, 1.0, max(gamma, b_max))
    dz = resolution / math.sqrt((2 * n + 1) * omega_max)
    npts = max(min_points, _pow2_at_least(2 * half / dz))
    return Grid1D.longitudinal(half, npts)


def default_radial_grid(gamma: float, omega0_r: float, k: int = 0, b_max: float = 1.0,
                        omega_max: float = None, min_points: int = 512,
                        resolution: float = 0.15) -> Grid1D:
    """Radial grid [dr, 10 sqrt((2k+1)/omega0_r) max(gamma, b_max)]."""
    omega_max = omega0_r if omega_max is None else omega_max
    r_max = 10.0 * math.sqrt((2 * k + 1) / omega0_r) * max(gamma, b_max)
    dr = resolution / math.sqrt((4 * k + 2) * omega_max)
    npts = max(min_points, _pow2_at_least(r_max / dr))
    return Grid1D.radial(r_max, npts)
