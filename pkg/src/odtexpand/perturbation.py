"""Perturbative fidelity estimates.

Longitudinal: the quartic correction -m omega_z^2 z^4 / (2 z_R^2) of the
Lorentzian axial potential, treated to first order on top of the expanding
modes of the harmonic invariant protocol. Radial: first-order adiabatic
perturbation theory in the harmonic approximation.

Everything is evaluated internally in trap units (hbar = m = omega0_z = 1).
Quantities with dimensions are converted back to SI on return.
"""
from dataclasses import dataclass, replace
import math
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_hermite, gammaln

from .errors import AttractivityError, QuadratureError
from .protocols import ExpansionTask, FrequencyTrajectory, ScalingFunction, quintic_scaling
from .trap_model import AtomSpecies
from .units import HBAR

GL_ORDER = 8
NODES_PER_PERIOD = 40
ATOL = 1e-10
_GL_X, _GL_W = leggauss(GL_ORDER)


@dataclass(frozen=True)
class PerturbationContext:
    task: ExpansionTask
    scaling: ScalingFunction
    level_n: int = 0

    def __post_init__(self):
        if self.level_n < 0 or int(self.level_n) != self.level_n:
            raise ValueError("level must be a non-negative integer")

    @classmethod
    def quintic(cls, task: ExpansionTask, level_n: int = 0):
        return cls(task, quintic_scaling(task), level_n)

    @property
    def geometry(self):
        return self.task.geometry

    def trap_units(self):
        """(dimensionless task, scaling with duration in units of 1/omega0_z)."""
        t = self.task.dimensionless()
        return t, replace(self.scaling, duration=self.scaling.duration * self.task.omega0_z)


def level_weight(n: int) -> int:
    """(n + 1)^2 + n^2."""
    return (n + 1) ** 2 + n**2


def z4_matrix_element(n: int, b: float, omega0: float, mass: float, hbar: float = HBAR) -> float:
    """<z^4> in the n-th expanding mode of scaling b: (hbar/m omega0)^2 (3 b^4/4) [(n+1)^2 + n^2]."""
    if not b > 0:
        raise ValueError("b must be positive")
    return (hbar / (mass * omega0)) ** 2 * 0.75 * b**4 * level_weight(n)


# quadrature helpers ---------------------------------------------------------

def _panel_edges(t0, t1, breakpoints, max_rate, min_panels):
    edges = sorted({t0, t1} | {b for b in breakpoints if t0 < b < t1})
    out = [np.array([edges[0]])]
    for a, b in zip(edges[:-1], edges[1:]):
        # GL_ORDER nodes per panel and >= NODES_PER_PERIOD nodes per phase period
        width = 2.0 * math.pi / max_rate * GL_ORDER / NODES_PER_PERIOD if max_rate > 0 else math.inf
        n = max(min_panels, int(math.ceil((b - a) / width)))
        out.append(np.linspace(a, b, n + 1)[1:])
    return np.concatenate(out)


def _gl_nodes(edges):
    a = edges[:-1, None]
    h = np.diff(edges)[:, None]
    return a + 0.5 * h * (_GL_X + 1.0), 0.5 * h * _GL_W


def _cumulative_phase(rate: Callable, edges, nodes):
    """theta(t) = int_0^t rate at every quadrature node, panel by panel."""
    panel_nodes, w = _gl_nodes(edges)
    panel_int = np.sum(rate(panel_nodes) * w, axis=1)
    start = np.concatenate([[0.0], np.cumsum(panel_int)[:-1]])
    a = edges[:-1, None, None]
    frac = (nodes[:, :, None] - a) * 0.5
    sub = a + frac * (_GL_X + 1.0)
    inner = np.sum(rate(sub) * (frac * _GL_W), axis=2)
    return start[:, None] + inner, start[-1] + panel_int[-1]


def oscillatory_integral(amplitude: Callable, rate: Callable, t0: float, t1: float,
                         max_rate: float, breakpoints: Sequence[float] = (),
                         atol: float = ATOL, rtol: float = 1e-10, min_panels: int = 16,
                         max_refinements: int = 8, with_phase: bool = False):
    """int_t0^t1 amplitude(t) exp(i theta(t)) dt with theta' = rate, theta(t0) = 0.

    Composite Gauss-Legendre panels sized so that the phase is sampled by at
    least NODES_PER_PERIOD nodes per period; panels never straddle a breakpoint.
    The panel count is doubled until two successive results agree.
    """
    if t1 == t0:
        return (0j, 0.0) if with_phase else 0j
    prev = None
    for _ in range(max_refinements):
        edges = _panel_edges(t0, t1, breakpoints, max_rate, min_panels)
        nodes, w = _gl_nodes(edges)
        theta, total_phase = _cumulative_phase(rate, edges, nodes)
        val = complex(np.sum(amplitude(nodes) * np.exp(1j * theta) * w))
        if prev is not None and abs(val - prev) <= max(atol, rtol * abs(val)):
            return (val, total_phase) if with_phase else val
        prev = val
        min_panels *= 2
    raise QuadratureError(f"oscillatory quadrature did not converge (last change {abs(val - prev):.3g})")


# longitudinal first order ---------------------------------------------------

def _omega_b4(scaling: ScalingFunction, t, omega0=1.0):
    """omega_z^2 b^4 = omega0^2 - b_ddot b^3 along the invariant protocol."""
    b, _, b2, _ = scaling.time_derivatives(t)
    return omega0**2 - b2 * b**3


def f1_diagonal(ctx: PerturbationContext, path: str = "direct") -> complex:
    """First-order diagonal amplitude f_nn of the quartic correction (dimensionless).

    ``direct`` integrates omega_z^2 <z^4> along the trajectory. ``magnitude``
    uses t_f - int b_ddot b^3 dt / omega0^2 and integrates only the scaling.
    """
    task, sc = ctx.trap_units()
    zr2 = task.geometry.rayleigh**2
    weight = level_weight(ctx.level_n)
    tf = sc.duration
    if path == "direct":
        integral = oscillatory_integral(lambda t: _omega_b4(sc, t), lambda t: 0.0 * t, 0.0, tf, 0.0)
        return 1j * 0.75 * weight * integral.real / (2.0 * zr2)
    if path == "magnitude":
        def bddot_b3(t):
            b, _, b2, _ = sc.time_derivatives(t)
            return b2 * b**3
        integral = oscillatory_integral(bddot_b3, lambda t: 0.0 * t, 0.0, tf, 0.0)
        return 1j * 3.0 * weight * (tf - integral.real) / (8.0 * zr2)
    raise ValueError("path must be 'direct' or 'magnitude'")


def scaling_action_integral(kind: str, gamma: float, t_final: float) -> float:
    """int_0^tf b^2 b_dot^2 dt, in the inverse time unit of ``t_final``.

    The optimal (Euler-Lagrange) shape has the closed form (gamma^2 - 1)^2 / (4 t_f);
    the quintic shape is integrated numerically.
    """
    if gamma < 1:
        raise ValueError("gamma must be >= 1 for an expansion")
    if kind == "optimal":
        return (gamma**2 - 1.0) ** 2 / (4.0 * t_final)
    if kind == "quintic":
        task = ExpansionTask(gamma**2, 1.0, 1.0, AtomSpecies(1.0), _unit_geometry())
        sc = quintic_scaling(task)

        def integrand(s):
            b, b1, _, _ = sc.time_derivatives(s)
            return (b * b1) ** 2

        val = oscillatory_integral(integrand, lambda s: 0.0 * s, 0.0, 1.0, 0.0).real
        return val / t_final
    raise ValueError("kind must be 'optimal' or 'quintic'")


def quintic_action_printed(gamma: float, t_final: float, squared_gamma: bool = True) -> float:
    """Closed form 10 c (1101 + 1351 g + 1101 g^2) / (24871 t_f).

    c = (g^2 - 1)^2 when ``squared_gamma`` else (g - 1)^2. Only the latter agrees
    with direct quadrature; both readings are kept for comparison.
    """
    c = (gamma**2 - 1.0) ** 2 if squared_gamma else (gamma - 1.0) ** 2
    return 10.0 * c * (1101.0 + 1351.0 * gamma + 1101.0 * gamma**2) / (24871.0 * t_final)


def _unit_geometry():
    from .trap_model import BeamGeometry
    return BeamGeometry(1.0, 1.0)


class FirstOrderBound(NamedTuple):
    bound: float
    quintic_bracket: float
    estimate: float


def _bound_prefactor(task: ExpansionTask, n: int, hbar=HBAR) -> float:
    # 3 hbar lambda^2 / (8 m pi^2 w0^4) [(n+1)^2 + n^2] = 3 hbar / (8 m z_R^2) [...]
    return 3.0 * hbar / (8.0 * task.atom.mass * task.geometry.rayleigh**2) * level_weight(n)


def fidelity_first_order_bound(ctx: PerturbationContext, hbar=HBAR) -> FirstOrderBound:
    """Lower bound 1 - C [t_f + 3 S / omega0^2] on the longitudinal fidelity.

    ``bound`` uses the optimal-shape action S, ``quintic_bracket`` the quintic
    one, and ``estimate`` is 1 - |f_nn| for the context's own scaling.
    """
    task = ctx.task
    pref = _bound_prefactor(task, ctx.level_n, hbar)
    tf, w0 = task.t_final, task.omega0_z
    s_opt = scaling_action_integral("optimal", task.gamma, tf)
    s_quint = scaling_action_integral("quintic", task.gamma, tf)
    return FirstOrderBound(
        1.0 - pref * (tf + 3.0 * s_opt / w0**2),
        1.0 - pref * (tf + 3.0 * s_quint / w0**2),
        1.0 - abs(f1_diagonal(ctx)),
    )


def bound_for(task: ExpansionTask, n: int, hbar=HBAR) -> float:
    """Closed-form optimal-shape bound without building a scaling."""
    pref = _bound_prefactor(task, n, hbar)
    s_opt = scaling_action_integral("optimal", task.gamma, task.t_final)
    return 1.0 - pref * (task.t_final + 3.0 * s_opt / task.omega0_z**2)


# longitudinal off-diagonal terms -----------------------------------------------

def selection_allowed(n: int, n_prime: int) -> bool:
    return abs(n - n_prime) in (0, 2, 4)


def alpha_coefficient(n: int, n_prime: int) -> float:
    """int exp(-y^2) H_n H_n' y^4 dy (physicists' Hermite), exact by Gauss-Hermite."""
    if n < 0 or n_prime < 0:
        raise ValueError("levels must be non-negative")
    if not selection_allowed(n, n_prime):
        return 0.0
    deg = n + n_prime + 4
    y, w = hermgauss(deg // 2 + 1)
    return float(np.sum(w * eval_hermite(n, y) * eval_hermite(n_prime, y) * y**4))


def beta_integral(n: int, n_prime: int, ctx: PerturbationContext, t: Optional[float] = None) -> complex:
    """int_0^t b^4 omega_z^2 exp(-i (n'-n) omega0 int dt2 / b^2) dt1, in SI (1/s).

    ``t`` defaults to t_f and is in seconds.
    """
    task, sc = ctx.trap_units()
    t_end = sc.duration if t is None else t * ctx.task.omega0_z
    if not 0.0 <= t_end <= sc.duration * (1 + 1e-12):
        raise ValueError("t must lie in [0, t_f]")
    delta = n_prime - n

    def rate(tt):
        b = sc.time_derivatives(tt)[0]
        return -delta / b**2

    bmin = float(np.min(sc(np.linspace(0.0, 1.0, 2001))))
    val = oscillatory_integral(lambda tt: _omega_b4(sc, tt), rate, 0.0, t_end, abs(delta) / bmin**2)
    return val * ctx.task.omega0_z


def off_diagonal_amplitude(n: int, n_prime: int, ctx: PerturbationContext) -> complex:
    """f_nn' = (i hbar lambda^2 / (2 pi^2 m w0^4 omega0^2)) alpha beta / sqrt(pi 2^(n+n') n! n'!)."""
    alpha = alpha_coefficient(n, n_prime)
    if alpha == 0.0:
        return 0.0j
    task, _ = ctx.trap_units()
    beta = beta_integral(n, n_prime, ctx) / ctx.task.omega0_z
    log_norm = 0.5 * (math.log(math.pi) + (n + n_prime) * math.log(2.0) + gammaln(n + 1) + gammaln(n_prime + 1))
    return 1j * alpha * beta * math.exp(-log_norm) / (2.0 * task.geometry.rayleigh**2)


def second_order_fidelity(ctx: PerturbationContext) -> float:
    """sqrt(1 - sum |f_nn'|^2) over n' = n +- 2, n +- 4 (n' >= 0)."""
    n = ctx.level_n
    total = 0.0
    for d in (-4, -2, 2, 4):
        if n + d >= 0:
            total += abs(off_diagonal_amplitude(n, n + d, ctx)) ** 2
    return math.sqrt(max(0.0, 1.0 - total))


# radial adiabatic perturbation theory ------------------------------------------

def adiabatic_amplitude(traj: FrequencyTrajectory, t_final: Optional[float] = None) -> complex:
    """a1 = -int (omega_R'/2 omega_R) exp(2i int omega_R) dt, harmonic radial trap.

    A frequency jump at a breakpoint contributes -(1/2) ln(omega+/omega-) exp(2i theta)
    (the instantaneous limit of the same integral). Time units follow the trajectory.
    """
    tf = traj.t_final if t_final is None else t_final
    ratio = traj.geometry.radial_ratio
    if traj.min_omega_sq < 0 or np.any(np.asarray(traj.omega_z_sq(traj.sample_times(2001))) <= 0):
        raise AttractivityError("adiabatic perturbation theory needs an attractive trap throughout")

    def amplitude(t):
        # omega_R'/omega_R = (omega_z^2)' / (2 omega_z^2)
        return -0.25 * np.asarray(traj.omega_z_sq_dot(t)) / np.asarray(traj.omega_z_sq(t))

    def rate(t):
        return 2.0 * ratio * np.sqrt(np.asarray(traj.omega_z_sq(t)))

    wmax = 2.0 * traj.max_omega(radial=True)
    val = oscillatory_integral(amplitude, rate, 0.0, tf, wmax, traj.breakpoints)
    for bp in traj.breakpoints:
        if not 0.0 <= bp <= tf:
            continue
        eps = 1e-9 * max(traj.t_final, 1e-300)
        w_minus = math.sqrt(float(traj.omega_z_sq(bp - eps)))
        w_plus = math.sqrt(float(traj.omega_z_sq(bp + eps)))
        if w_minus == w_plus:
            continue
        theta = _phase_to(rate, bp, traj.breakpoints, wmax) if bp > 0 else 0.0
        val += -0.5 * math.log(w_plus / w_minus) * np.exp(1j * theta)
    return complex(val)


def _phase_to(rate, t, breakpoints, max_rate):
    edges = _panel_edges(0.0, t, breakpoints, max_rate, 16)
    nodes, w = _gl_nodes(edges)
    return float(np.sum(rate(nodes) * w))


def radial_fidelity_estimate(traj: FrequencyTrajectory) -> float:
    """sqrt(1 - |a1|^2)."""
    a1 = adiabatic_amplitude(traj)
    return math.sqrt(max(0.0, 1.0 - abs(a1) ** 2))


def bounds_table(task: ExpansionTask, levels: Sequence[int], numeric: Optional[Sequence[float]] = None):
    """Rows (n, bound, first_order_estimate, second_order_estimate, numeric_fidelity)."""
    rows = []
    for i, n in enumerate(levels):
        ctx = PerturbationContext.quintic(task, n)
        fb = fidelity_first_order_bound(ctx)
        num = math.nan if numeric is None else float(numeric[i])
        rows.append((n, fb.bound, fb.estimate, second_order_fidelity(ctx), num))
    return rows
