"""Compiled inner loops for the 2D alternating-direction step.

The tridiagonal systems (1 + i h T) x = y have constant coefficients, so the
Thomas elimination factors are precomputed once per step size. The matrices
are strictly diagonally dominant, which makes elimination without pivoting safe.
"""
import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f
        return wrap


def thomas_factors(diag, off, h):
    """Elimination factors of 1 + i h T for real symmetric tridiagonal T."""
    a = 1.0 + 1j * h * np.asarray(diag, dtype=float)
    e = 1j * h * np.asarray(off, dtype=float)
    n = a.size
    cp = np.zeros(n, dtype=complex)
    inv = np.zeros(n, dtype=complex)
    inv[0] = 1.0 / a[0]
    for i in range(1, n):
        cp[i - 1] = e[i - 1] * inv[i - 1]
        inv[i] = 1.0 / (a[i] - e[i - 1] * cp[i - 1])
    return e, cp, inv


@njit(cache=True)
def _sweep_axis0(psi, work, bdiag, e, cp, inv):
    # rows are coupled, columns independent; inner loops run along contiguous rows
    n, m = psi.shape
    for j in range(m):
        work[0, j] = (bdiag[0] * psi[0, j] - e[0] * psi[1, j]) * inv[0]
    for i in range(1, n - 1):
        for j in range(m):
            rhs = bdiag[i] * psi[i, j] - e[i - 1] * psi[i - 1, j] - e[i] * psi[i + 1, j]
            work[i, j] = (rhs - e[i - 1] * work[i - 1, j]) * inv[i]
    for j in range(m):
        rhs = bdiag[n - 1] * psi[n - 1, j] - e[n - 2] * psi[n - 2, j]
        work[n - 1, j] = (rhs - e[n - 2] * work[n - 2, j]) * inv[n - 1]
        psi[n - 1, j] = work[n - 1, j]
    for i in range(n - 2, -1, -1):
        for j in range(m):
            psi[i, j] = work[i, j] - cp[i] * psi[i + 1, j]


@njit(cache=True)
def _sweep_axis1(psi, work, bdiag, e, cp, inv):
    n, m = psi.shape
    for i in range(n):
        row = psi[i]
        w = work[i]
        w[0] = (bdiag[0] * row[0] - e[0] * row[1]) * inv[0]
        for j in range(1, m - 1):
            rhs = bdiag[j] * row[j] - e[j - 1] * row[j - 1] - e[j] * row[j + 1]
            w[j] = (rhs - e[j - 1] * w[j - 1]) * inv[j]
        rhs = bdiag[m - 1] * row[m - 1] - e[m - 2] * row[m - 2]
        w[m - 1] = (rhs - e[m - 2] * w[m - 2]) * inv[m - 1]
        row[m - 1] = w[m - 1]
        for j in range(m - 2, -1, -1):
            row[j] = w[j] - cp[j] * row[j + 1]


@njit(cache=True)
def _apply_phase(psi, u, c):
    n, m = psi.shape
    for i in range(n):
        for j in range(m):
            a = c * u[i, j]
            psi[i, j] *= complex(np.cos(a), -np.sin(a))


@njit(cache=True)
def adi_steps(psi, work, u, half_angles, r_fac, z_fac):
    """Run consecutive steps exp(-i c u) CN_z CN_r exp(-i c u) in place.

    half_angles[k] = dt omega_z^2(t_mid) / 2 for step k. Adjacent potential
    half-steps are merged into a single phase factor.
    """
    rb, re, rcp, rinv = r_fac
    zb, ze, zcp, zinv = z_fac
    k = half_angles.shape[0]
    _apply_phase(psi, u, half_angles[0])
    for s in range(k):
        _sweep_axis0(psi, work, rb, re, rcp, rinv)
        _sweep_axis1(psi, work, zb, ze, zcp, zinv)
        if s + 1 < k:
            _apply_phase(psi, u, half_angles[s] + half_angles[s + 1])
    _apply_phase(psi, u, half_angles[k - 1])
