"""Gaussian-beam optical dipole trap: potential, harmonic limits and static relations.

Formulas here are unit-homogeneous. They are evaluated in SI by default, and
the only places where hbar enters take it as a keyword so that the same code
serves trap units (hbar = m = 1).
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import AttractivityError, SingularDetuningError, SingularRadiusError
from .units import C_LIGHT, H_PLANCK, HBAR, RB87_MASS


def _require_positive(**values):
    for name, value in values.items():
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value!r}")


def rayleigh_range(w0, wavelength):
    """pi * w0**2 / lambda."""
    _require_positive(w0=w0, wavelength=wavelength)
    return math.pi * w0**2 / wavelength


def saturation_intensity(wavelength, tau):
    """Two-level saturation intensity pi*h*c / (3 lambda^3 tau)."""
    _require_positive(wavelength=wavelength, tau=tau)
    return math.pi * H_PLANCK * C_LIGHT / (3.0 * wavelength**3 * tau)


@dataclass(frozen=True)
class BeamGeometry:
    waist: float
    wavelength: float
    rayleigh: float = field(init=False)
    paraxial: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "rayleigh", rayleigh_range(self.waist, self.wavelength))
        # recorded, never enforced
        object.__setattr__(self, "paraxial", self.waist > 2.0 * self.wavelength / math.pi)

    def spot_size(self, z):
        return self.waist * np.sqrt(1.0 + (np.asarray(z) / self.rayleigh) ** 2)

    @property
    def radial_ratio(self) -> float:
        """omega_R / omega_z = sqrt(2) pi w0 / lambda."""
        return math.sqrt(2.0) * math.pi * self.waist / self.wavelength

    def scaled(self, length_unit: float) -> "BeamGeometry":
        return BeamGeometry(self.waist / length_unit, self.wavelength / length_unit)


@dataclass(frozen=True)
class AtomSpecies:
    mass: float = RB87_MASS
    name: str = "Rb87"

    def __post_init__(self):
        _require_positive(mass=self.mass)


@dataclass(frozen=True)
class LaserDrive:
    """Two-level drive parameters.

    ``transition_wavelength`` sets the saturation intensity; it is the atomic
    line, not the trapping laser. ``detuning`` is signed (laser minus atom),
    so red detuning is negative and gives an attractive trap.
    """

    linewidth: float
    detuning: float
    peak_intensity: float
    transition_wavelength: float

    def __post_init__(self):
        _require_positive(linewidth=self.linewidth,
                          transition_wavelength=self.transition_wavelength)
        if self.peak_intensity < 0:
            raise ValueError("peak intensity must be non-negative")

    @property
    def lifetime(self) -> float:
        return 1.0 / self.linewidth

    @property
    def saturation(self) -> float:
        return saturation_intensity(self.transition_wavelength, self.lifetime)

    @property
    def rabi_frequency(self) -> float:
        return self.linewidth * math.sqrt(self.peak_intensity / (2.0 * self.saturation))

    @property
    def validity_ratio(self) -> float:
        """|delta| / max(Gamma, Omega); the far-detuned regime wants this >> 1."""
        return abs(self.detuning) / max(self.linewidth, self.rabi_frequency)


def peak_intensity(power, w0):
    _require_positive(w0=w0)
    return 2.0 * power / (math.pi * w0**2)


def detuning_from_wavelengths(laser_wavelength, transition_wavelength):
    """Signed angular detuning omega_laser - omega_atom."""
    _require_positive(laser_wavelength=laser_wavelength,
                      transition_wavelength=transition_wavelength)
    return 2.0 * math.pi * C_LIGHT * (1.0 / laser_wavelength - 1.0 / transition_wavelength)


def depth_from_laser(drive: LaserDrive, allow_repulsive=False, hbar=HBAR):
    """Trap depth V0 = I0 hbar Gamma^2 / (8 |delta| I_sat).

    Sign convention: V0 > 0 is an attractive (red-detuned, delta < 0) trap.
    Blue detuning yields V0 < 0, rejected unless ``allow_repulsive``.
    """
    if drive.detuning == 0:
        raise SingularDetuningError("zero detuning: the dipole potential diverges")
    v0 = -drive.peak_intensity * hbar * drive.linewidth**2 / (8.0 * drive.detuning * drive.saturation)
    if v0 < 0 and not allow_repulsive:
        raise AttractivityError("blue detuning gives a repulsive trap")
    return v0


@dataclass(frozen=True)
class TrapSnapshot:
    depth: float
    geometry: BeamGeometry
    nu: int = 0

    def __post_init__(self):
        if int(self.nu) != self.nu:
            raise ValueError("azimuthal quantum number must be an integer")

    @property
    def repulsive(self) -> bool:
        return self.depth < 0


def shape_function(r, z, geometry: BeamGeometry):
    """1 - exp(-2 r^2/w(z)^2) / (1 + z^2/z_R^2), evaluated without cancellation."""
    r = np.asarray(r, dtype=float)
    q = (np.asarray(z, dtype=float) / geometry.rayleigh) ** 2
    a = 2.0 * r**2 / (geometry.waist**2 * (1.0 + q))
    return (q - np.expm1(-a)) / (1.0 + q)


def potential(r, z, snap: TrapSnapshot):
    """V(r, z) = -V0 exp(-2r^2/w^2(z)) / (1 + z^2/z_R^2) + V0."""
    return snap.depth * shape_function(r, z, snap.geometry)


def centrifugal_term(r, nu, mass, hbar=HBAR):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SingularRadiusError("the sqrt(r)-transformed potential is singular at r = 0")
    return hbar**2 * (nu**2 - 0.25) / (2.0 * mass * r**2)


def effective_potential(r, z, snap: TrapSnapshot, atom: AtomSpecies, hbar=HBAR):
    return potential(r, z, snap) + centrifugal_term(r, snap.nu, atom.mass, hbar)


def v0_from_omega_z_sq(omega_z_sq, geometry: BeamGeometry, atom: AtomSpecies,
                       allow_repulsive=False):
    if np.any(np.asarray(omega_z_sq) < 0) and not allow_repulsive:
        raise AttractivityError("negative omega_z^2 requires allow_repulsive")
    return 0.5 * atom.mass * np.asarray(omega_z_sq) * geometry.rayleigh**2


def v0_from_omega_z(omega_z, geometry: BeamGeometry, atom: AtomSpecies):
    """V0 = m omega_z^2 z_R^2 / 2."""
    return v0_from_omega_z_sq(np.asarray(omega_z) ** 2, geometry, atom)


def omega_z_from_v0(v0, geometry: BeamGeometry, atom: AtomSpecies):
    if np.any(np.asarray(v0) < 0):
        raise AttractivityError("negative depth has no real longitudinal frequency")
    return np.sqrt(2.0 * np.asarray(v0) / atom.mass) / geometry.rayleigh


def omega_r_from_omega_z(omega_z, geometry: BeamGeometry):
    return geometry.radial_ratio * np.asarray(omega_z)


@dataclass(frozen=True)
class QuarticExpansion:
    """Coefficients of V ~ c_r2 r^2 + c_z2 z^2 + c_r4 r^4 + c_z4 z^4 + c_r2z2 r^2 z^2."""

    r2: float
    z2: float
    r4: float
    z4: float
    r2z2: float

    def __call__(self, r, z, order=4):
        r = np.asarray(r)
        z = np.asarray(z)
        v = self.r2 * r**2 + self.z2 * z**2
        if order >= 4:
            v = v + self.r4 * r**4 + self.z4 * z**4 + self.r2z2 * r**2 * z**2
        return v


def series_coefficients(snap: TrapSnapshot) -> QuarticExpansion:
    v0 = snap.depth
    w0 = snap.geometry.waist
    zr = snap.geometry.rayleigh
    return QuarticExpansion(
        r2=2.0 * v0 / w0**2,
        z2=v0 / zr**2,
        r4=-2.0 * v0 / w0**4,
        z4=-v0 / zr**4,
        r2z2=-4.0 * v0 / (w0**2 * zr**2),
    )


@dataclass(frozen=True)
class PhysicalMargins:
    paraxial_ratio: float
    gravity_ratio: float


def physical_margins(geometry: BeamGeometry, omega_r, g) -> PhysicalMargins:
    # paraxial wants >> 1, gravity sag wants << 1
    paraxial = geometry.waist / (2.0 * geometry.wavelength / math.pi)
    gravity = g / (geometry.waist * omega_r**2) if omega_r != 0 else math.inf
    return PhysicalMargins(paraxial, gravity)
