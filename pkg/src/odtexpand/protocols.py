"""Trap-frequency trajectories for fast expansions.

Three families are provided: invariant-based inverse engineering (a scaling
function b fed through the Ermakov equation), a single-step bang-bang and the
constant-adiabaticity "fast adiabatic" ramp. Trajectories are analytic
evaluators; nothing is tabulated.

All formulas are unit-homogeneous, so a task expressed in trap units (see
:meth:`ExpansionTask.dimensionless`) yields a trajectory in trap units.
"""
from dataclasses import dataclass, field, replace
import math
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import AttractivityError, PhysicsDomainError
from .trap_model import AtomSpecies, BeamGeometry
from .units import TrapUnits


@dataclass(frozen=True)
class ExpansionTask:
    omega0_z: float
    omegaf_z: float
    t_final: float
    atom: AtomSpecies
    geometry: BeamGeometry

    def __post_init__(self):
        for name in ("omega0_z", "omegaf_z", "t_final"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def gamma(self) -> float:
        return math.sqrt(self.omega0_z / self.omegaf_z)

    def units(self) -> TrapUnits:
        return TrapUnits(self.omega0_z, self.atom.mass)

    def dimensionless(self) -> "ExpansionTask":
        """The same task in trap units (omega0_z = 1, m = 1, hbar = 1)."""
        u = self.units()
        return ExpansionTask(
            omega0_z=1.0,
            omegaf_z=self.omegaf_z / self.omega0_z,
            t_final=self.t_final * self.omega0_z,
            atom=AtomSpecies(1.0, self.atom.name),
            geometry=self.geometry.scaled(u.length),
        )

    def with_t_final(self, t_final) -> "ExpansionTask":
        return replace(self, t_final=t_final)


ScalingEvaluator = Callable[[np.ndarray], tuple]


@dataclass(frozen=True)
class ScalingFunction:
    """Scaling function b on s = t/duration in [0, 1].

    ``evaluator(s)`` returns (b, db/ds, d2b/ds2, d3b/ds3).
    """

    kind: str
    duration: float
    evaluator: ScalingEvaluator
    gamma: float = 1.0

    def derivatives(self, s):
        return self.evaluator(np.asarray(s, dtype=float))

    def __call__(self, s):
        return self.derivatives(s)[0]

    def time_derivatives(self, t):
        """(b, b_dot, b_ddot, b_dddot) at physical time t."""
        T = self.duration
        b, b1, b2, b3 = self.derivatives(np.asarray(t, dtype=float) / T)
        return b, b1 / T, b2 / T**2, b3 / T**3


def _quintic_evaluator(gamma):
    g1 = gamma - 1.0

    def evaluate(s):
        b = 1.0 + g1 * s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
        b1 = 30.0 * g1 * s**2 * (1.0 - s) ** 2
        b2 = 60.0 * g1 * s * (1.0 - s) * (1.0 - 2.0 * s)
        b3 = 60.0 * g1 * (1.0 - 6.0 * s + 6.0 * s**2)
        return b, b1, b2, b3

    return evaluate


def quintic_scaling(task: ExpansionTask) -> ScalingFunction:
    """b(s) = 6(g-1)s^5 - 15(g-1)s^4 + 10(g-1)s^3 + 1 with g = gamma."""
    return ScalingFunction("quintic", task.t_final, _quintic_evaluator(task.gamma), task.gamma)


def optimal_bound_scaling(gamma, t_final) -> ScalingFunction:
    """Euler-Lagrange minimiser of the b^2 b_dot^2 action, b = sqrt(1 + (g^2-1)s).

    Its derivatives jump at both ends; only used inside bound formulas.
    """
    c = gamma**2 - 1.0

    def evaluate(s):
        u = 1.0 + c * s
        b = np.sqrt(u)
        b1 = 0.5 * c / b
        b2 = -0.25 * c**2 / b**3
        b3 = 0.375 * c**3 / b**5
        return b, b1, b2, b3

    return ScalingFunction("optimal-bound", t_final, evaluate, gamma)


def constant_frequency_scaling(omega0, omega1, duration=None) -> ScalingFunction:
    """Ermakov solution for a constant frequency omega1 starting from b=1, b_dot=0.

    b(t) = sqrt(((omega0^2 - omega1^2)/omega1^2) sin^2(omega1 t) + 1).
    The default duration is the quarter period pi/(2 omega1).
    """
    if not omega1 > 0:
        raise ValueError("omega1 must be positive")
    if duration is None:
        duration = math.pi / (2.0 * omega1)
    A = (omega0**2 - omega1**2) / omega1**2
    w = omega1
    T = duration

    def evaluate(s):
        t = s * T
        u = A * np.sin(w * t) ** 2 + 1.0
        u1 = A * w * np.sin(2 * w * t)
        u2 = 2 * A * w**2 * np.cos(2 * w * t)
        u3 = -4 * A * w**3 * np.sin(2 * w * t)
        b = np.sqrt(u)
        b1 = u1 / (2 * b)
        b2 = (0.5 * u2 - b1**2) / b
        b3 = (0.5 * u3 - 3 * b1 * b2) / b
        return b, b1 * T, b2 * T**2, b3 * T**3

    return ScalingFunction("constant-frequency", duration, evaluate, omega0 / omega1 if omega1 else 1.0)


@dataclass(frozen=True)
class FrequencyTrajectory:
    """Evaluable longitudinal frequency schedule on [0, t_final].

    Outside the interval the trap sits at the task's initial/final frequency.
    ``omega_z_sq`` may go negative only when ``allow_repulsive`` was set.
    """

    kind: str
    task: ExpansionTask
    t_final: float
    omega_sq_fn: Callable
    omega_sq_dot_fn: Callable
    breakpoints: tuple = ()
    scaling: Optional[ScalingFunction] = None
    allow_repulsive: bool = False
    min_omega_sq: float = field(default=math.nan)

    @property
    def geometry(self) -> BeamGeometry:
        return self.task.geometry

    def _clamped(self, fn, t, before, after):
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, 0.0, self.t_final)
        out = np.asarray(fn(tc), dtype=float) * np.ones_like(tc)
        out = np.where(t < 0, before, out)
        out = np.where(t > self.t_final, after, out)
        return out if out.ndim else float(out)

    def omega_z_sq(self, t):
        return self._clamped(self.omega_sq_fn, t, self.task.omega0_z**2, self.task.omegaf_z**2)

    def omega_z_sq_dot(self, t):
        return self._clamped(self.omega_sq_dot_fn, t, 0.0, 0.0)

    def omega_z(self, t):
        """sqrt(omega_z^2); NaN where the trap is repulsive."""
        w2 = np.asarray(self.omega_z_sq(t))
        with np.errstate(invalid="ignore"):
            out = np.where(w2 >= 0, np.sqrt(np.abs(w2)), np.nan)
        return out if out.ndim else float(out)

    def omega_z_dot(self, t):
        w2 = np.asarray(self.omega_z_sq(t))
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.asarray(self.omega_z_sq_dot(t)) / (2.0 * np.sqrt(w2))
        return out if out.ndim else float(out)

    def v0(self, t):
        """Trap depth m omega_z^2 z_R^2 / 2 (negative when repulsive)."""
        return 0.5 * self.task.atom.mass * np.asarray(self.omega_z_sq(t)) * self.geometry.rayleigh**2

    def omega_r(self, t):
        return self.geometry.radial_ratio * np.asarray(self.omega_z(t))

    def omega_r_sq(self, t):
        return self.geometry.radial_ratio**2 * np.asarray(self.omega_z_sq(t))

    def sample_times(self, n=10001):
        """Dense time grid including both sides of every breakpoint."""
        t = np.linspace(0.0, self.t_final, n)
        if self.breakpoints:
            eps = 1e-12 * self.t_final
            extra = [x for bp in self.breakpoints for x in (bp - eps, bp + eps)]
            t = np.unique(np.clip(np.concatenate([t, extra]), 0.0, self.t_final))
        return t

    def max_omega(self, radial=False) -> float:
        t = self.sample_times()
        w2 = np.abs(np.asarray(self.omega_z_sq(t)))
        w2max = max(float(np.max(w2)), self.task.omega0_z**2, self.task.omegaf_z**2)
        w = math.sqrt(w2max)
        return w * self.geometry.radial_ratio if radial else w

    def in_trap_units(self) -> "FrequencyTrajectory":
        """Rebuild the same protocol on the dimensionless task."""
        return rebuild(self, self.task.dimensionless())


def _min_over_grid(fn, t0, t1, n=4001):
    t = np.linspace(t0, t1, n)
    v = np.asarray(fn(t))
    i = int(np.argmin(v))
    lo = t[max(i - 1, 0)]
    hi = t[min(i + 1, n - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: float(fn(x)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * (t1 - t0 or 1.0)})
        return min(float(v[i]), float(res.fun))
    return float(v[i])


def omega_from_scaling(b: ScalingFunction, task: ExpansionTask,
                       allow_repulsive=False) -> FrequencyTrajectory:
    """omega_z^2(t) = omega0^2/b^4 - b_ddot/b (Ermakov equation solved for omega)."""
    w0 = task.omega0_z

    def w2(t):
        bb, _, b2, _ = b.time_derivatives(t)
        return w0**2 / bb**4 - b2 / bb

    def w2dot(t):
        bb, b1, b2, b3 = b.time_derivatives(t)
        return -4.0 * w0**2 * b1 / bb**5 - (b3 * bb - b2 * b1) / bb**2

    min_w2 = _min_over_grid(w2, 0.0, b.duration)
    if min_w2 < 0 and not allow_repulsive:
        raise AttractivityError(
            f"invariant protocol turns repulsive (min omega^2 = {min_w2:.4g}); "
            f"t_final = {b.duration:.4g} is below the attractivity threshold")
    return FrequencyTrajectory("invariant", task.with_t_final(b.duration), b.duration, w2, w2dot,
                               (), b, allow_repulsive, min_w2)


def ermakov_residual(traj: FrequencyTrajectory, t):
    """b_ddot + omega^2 b - omega0^2 / b^3 along an invariant trajectory."""
    if traj.scaling is None:
        raise ValueError("trajectory carries no scaling function")
    bb, _, b2, _ = traj.scaling.time_derivatives(t)
    return b2 + np.asarray(traj.omega_z_sq(t)) * bb - traj.task.omega0_z**2 / bb**3


def invariant_protocol(task: ExpansionTask, allow_repulsive=False) -> FrequencyTrajectory:
    return omega_from_scaling(quintic_scaling(task), task, allow_repulsive)


def bang_bang_time(omega0, omegaf) -> float:
    """Quarter period of the geometric-mean frequency, pi / (2 sqrt(omega0 omegaf))."""
    return math.pi / (2.0 * math.sqrt(omega0 * omegaf))


def bang_bang(task: ExpansionTask) -> FrequencyTrajectory:
    """Single intermediate step at sqrt(omega0 omegaf); task.t_final is ignored."""
    w0, wf = task.omega0_z, task.omegaf_z
    w1 = math.sqrt(w0 * wf)
    tb = bang_bang_time(w0, wf)

    def w2(t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= 0, w0**2, np.where(t < tb, w1**2, wf**2))

    def w2dot(t):
        return np.zeros_like(np.asarray(t, dtype=float))

    return FrequencyTrajectory("bang-bang", task.with_t_final(tb), tb, w2, w2dot, (0.0, tb),
                               constant_frequency_scaling(w0, w1, tb), False, min(w1, wf) ** 2)


def radial_bang_bang_time(task: ExpansionTask) -> float:
    """Quarter period of the radial intermediate frequency (mismatch diagnostic)."""
    return bang_bang_time(task.omega0_z, task.omegaf_z) / task.geometry.radial_ratio


def fast_adiabatic(task: ExpansionTask) -> FrequencyTrajectory:
    """omega(t) = omega0 / (1 - (omegaf - omega0) t / (t_f omegaf)): constant omega_dot/omega^2."""
    w0, wf, tf = task.omega0_z, task.omegaf_z, task.t_final
    k = (wf - w0) / (tf * wf)
    if 1.0 - k * tf <= 0:
        raise PhysicsDomainError("fast-adiabatic ramp denominator vanishes inside [0, t_f]")

    def w(t):
        return w0 / (1.0 - k * np.asarray(t, dtype=float))

    def w2(t):
        return w(t) ** 2

    def w2dot(t):
        # omega_dot = k omega^2 / omega0
        return 2.0 * k * w(t) ** 3 / w0

    return FrequencyTrajectory("fast-adiabatic", task, tf, w2, w2dot, (), None, False, min(w0, wf) ** 2)


PROTOCOLS = {
    "invariant": invariant_protocol,
    "bang-bang": lambda task, allow_repulsive=False: bang_bang(task),
    "fast-adiabatic": lambda task, allow_repulsive=False: fast_adiabatic(task),
}


def make_trajectory(kind: str, task: ExpansionTask, allow_repulsive=False) -> FrequencyTrajectory:
    try:
        build = PROTOCOLS[kind]
    except KeyError:
        raise ValueError(f"unknown protocol {kind!r}; expected one of {sorted(PROTOCOLS)}") from None
    return build(task, allow_repulsive=allow_repulsive)


def rebuild(traj: FrequencyTrajectory, task: ExpansionTask) -> FrequencyTrajectory:
    return make_trajectory(traj.kind, task, traj.allow_repulsive)


def ideal_radial_omega_sq(traj: FrequencyTrajectory, t):
    """Radial frequency an ideal radial inverse engineering with the same b would need."""
    if traj.scaling is None:
        raise ValueError("trajectory carries no scaling function")
    bb, _, b2, _ = traj.scaling.time_derivatives(t)
    w0r = traj.geometry.radial_ratio * traj.task.omega0_z
    return w0r**2 / bb**4 - b2 / bb


def _attractive(shape: ScalingFunction, omega0, t_final):
    def w2(s):
        b, _, b2, _ = shape.derivatives(s)
        return omega0**2 / b**4 - b2 / (t_final**2 * b)

    return _min_over_grid(w2, 0.0, 1.0) >= 0.0


def min_attractive_tf(task: ExpansionTask, kind="quintic", rtol=1e-6,
                      bracket=(1e-6, 1e-1)) -> float:
    """Smallest t_f for which omega_z^2 stays non-negative, by bisection.

    The bracket is in the task's time unit and is widened tenfold as needed.
    """
    if kind != "quintic":
        raise ValueError("only the quintic shape is t_f-independent in s")
    shape = quintic_scaling(task.with_t_final(1.0))
    s = np.linspace(0.0, 1.0, 4001)
    if np.all(shape.derivatives(s)[2] <= 0):
        return 0.0
    w0 = task.omega0_z
    lo, hi = bracket
    while _attractive(shape, w0, lo):
        lo /= 10.0
        if lo < 1e-30:
            return 0.0
    while not _attractive(shape, w0, hi):
        hi *= 10.0
    while (hi - lo) > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _attractive(shape, w0, mid):
            hi = mid
        else:
            lo = mid
    return hi


class AdiabaticityMargin(NamedTuple):
    value: float
    t_at_max: float
    has_jump: bool


def adiabaticity_margin(traj: FrequencyTrajectory, direction="longitudinal") -> AdiabaticityMargin:
    """max_t of sqrt(2)|w_z'|/(8 w_z^2) (longitudinal) or |w_R'|/(4 w_R^2) (radial).

    Derivatives are one-sided at breakpoints; a jump is flagged, not scored.
    """
    t = traj.sample_times()
    w2 = np.asarray(traj.omega_z_sq(t))
    w2dot = np.asarray(traj.omega_z_sq_dot(t))
    # |w'|/w^2 = |d(w^2)/dt| / (2 w^3)
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.abs(w2dot) / (2.0 * np.abs(w2) ** 1.5)
    if direction == "longitudinal":
        ratio = math.sqrt(2.0) / 8.0 * rate
    elif direction == "radial":
        ratio = rate / (4.0 * traj.geometry.radial_ratio)
    else:
        raise ValueError("direction must be 'longitudinal' or 'radial'")
    ratio = np.where(np.isfinite(ratio), ratio, np.inf)
    i = int(np.argmax(ratio))
    return AdiabaticityMargin(float(ratio[i]), float(t[i]), bool(traj.breakpoints))


def trajectory_table(traj: FrequencyTrajectory, n=1001):
    """Columns t_s, omega_z_rad_s, omega_z_sq, V0_J, omega_R_rad_s (SI trajectory assumed)."""
    t = traj.sample_times(n)
    return {
        "t_s": t,
        "omega_z_rad_s": np.asarray(traj.omega_z(t)),
        "omega_z_sq": np.asarray(traj.omega_z_sq(t)),
        "V0_J": np.asarray(traj.v0(t)),
        "omega_R_rad_s": np.asarray(traj.omega_r(t)),
    }
