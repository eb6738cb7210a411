"""Physical constants and the trap-unit system.

Numerical work runs in trap units: hbar = m = 1, time in 1/omega_ref and
length in sqrt(hbar / (m * omega_ref)). SI values only appear at the edges.
"""
from dataclasses import dataclass
import math

from scipy import constants as csts

HBAR = csts.hbar
H_PLANCK = csts.h
C_LIGHT = csts.c
G_EARTH = csts.g

# 86.909 u
RB87_MASS = 1.44316e-25


@dataclass(frozen=True)
class TrapUnits:
    """Scales mapping SI quantities to trap units and back."""

    omega: float
    mass: float
    hbar: float = HBAR

    def __post_init__(self):
        if not (self.omega > 0 and self.mass > 0 and self.hbar > 0):
            raise ValueError("trap units need positive omega, mass and hbar")

    @property
    def time(self) -> float:
        return 1.0 / self.omega

    @property
    def length(self) -> float:
        return math.sqrt(self.hbar / (self.mass * self.omega))

    @property
    def energy(self) -> float:
        return self.hbar * self.omega

    def to_trap(self, value: float, kind: str) -> float:
        return value / self.scale(kind)

    def to_si(self, value: float, kind: str) -> float:
        return value * self.scale(kind)

    def scale(self, kind: str) -> float:
        scales = {
            "time": self.time,
            "length": self.length,
            "energy": self.energy,
            "frequency": self.omega,
            "mass": self.mass,
            "rate": self.omega,
        }
        try:
            return scales[kind]
        except KeyError:
            raise ValueError(f"unknown quantity kind {kind!r}") from None
