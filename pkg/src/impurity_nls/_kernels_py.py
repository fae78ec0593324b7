"""Pure NumPy/SciPy versions of the hot loops (fallback for ``_kernels``).

Both kernels integrate the free kernel against a density that is linear in
time between mesh nodes. With ``r = t - s`` and ``a = x^2 / 4`` the two
antiderivatives needed are

    P0(r) = int r^(-1/2) exp(i a / r) dr
          = exp(i a / r) * (2 sqrt(r) - 2 sqrt(pi) sqrt(-i a) w(i sqrt(-i a / r)))
    P1(r) = int r^(1/2) exp(i a / r) dr
          = (2/3) r^(3/2) exp(i a / r) + (2/3) i a P0(r)

with ``w`` the Faddeeva function and ``P0(0) = P1(0) = 0``. For ``a = 0``
they reduce to ``2 sqrt(r)`` and ``(2/3) r^(3/2)``, the Abel weights.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import wofz

from .errors import NumericalFailure


#: residual beyond which the iteration is declared divergent
_DIVERGED = 1e50


class ChargeNonconvergenceError(NumericalFailure):
    """The per-node fixed-point iteration did not reach its tolerance."""


def abel_linear_weights(n: int, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Weights of ``g_j`` and ``g_{j+1}`` on the subinterval at lag ``m = n - j``.

    Returned arrays are indexed by ``m = 0..n`` (entry 0 unused and zero).
    ``left[m] + right[m] = 2 sqrt(delta) (sqrt(m) - sqrt(m-1))``.
    """
    m = np.arange(n + 1, dtype=float)
    mm1 = np.maximum(m - 1.0, 0.0)
    sd = math.sqrt(delta)
    a0 = 2.0 * sd * (np.sqrt(m) - np.sqrt(mm1))
    a1 = m * delta * a0 - (2.0 / 3.0) * delta * sd * (m**1.5 - mm1**1.5)
    right = a1 / delta
    left = a0 - right
    left[0] = right[0] = 0.0
    return left, right


def solve_charge(f, kappa: complex, delta: float, damping: float, tol: float, max_iter: int):
    """Product-integration solve of ``q(t) = f(t) + kappa int (t-s)^(-1/2) |q|^2 q ds``.

    Returns ``(q, iterations)``; raises :class:`ChargeNonconvergenceError`.
    """
    f = np.asarray(f, dtype=np.complex128)
    n_max = f.size - 1
    left, right = abel_linear_weights(n_max, delta)
    # total weight of g_k for 0 < k < n at lag m = n - k
    comb = np.zeros(n_max + 1)
    comb[1:n_max] = left[1:n_max] + right[2 : n_max + 1]
    q = np.empty(n_max + 1, dtype=np.complex128)
    g = np.empty(n_max + 1, dtype=np.complex128)
    iters = np.zeros(n_max + 1, dtype=np.int64)
    q[0] = f[0]
    g[0] = abs(q[0]) ** 2 * q[0]
    self_w = kappa * right[1]
    for n in range(1, n_max + 1):
        hist = left[n] * g[0]
        if n > 1:
            hist += np.dot(comb[n - 1 : 0 : -1], g[1:n])
        base = f[n] + kappa * hist
        z = 2.0 * q[n - 1] - q[n - 2] if n > 1 else q[0]
        for it in range(1, max_iter + 1):
            res = base + self_w * (abs(z) ** 2 * z) - z
            if abs(res) <= tol * max(1.0, abs(z)):
                break
            if not abs(res) < _DIVERGED:
                break
            z = z + damping * res
        if not abs(res) <= tol * max(1.0, abs(z)):
            raise ChargeNonconvergenceError(
                f"charge iteration did not converge at node {n} (residual {abs(res):.3e}); "
                f"reduce the mesh step (delta={delta})"
            )
        iters[n] = it
        q[n] = z
        g[n] = abs(z) ** 2 * z
    return q, iters


def _antiderivatives(a: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``P0, P1`` on the outer product of ``a`` (rows) and ``r`` (columns)."""
    a = a[:, None]
    r = r[None, :]
    sr = np.sqrt(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.sqrt(-1j * a)
        phase = np.exp(1j * a / r)
        zeta = 1j * root / sr
        p0 = phase * (2.0 * sr - 2.0 * math.sqrt(math.pi) * root * wofz(zeta))
    p0 = np.where(r > 0, p0, 0.0)
    p0 = np.where(a > 0, p0, 2.0 * sr + 0j)
    p1 = (2.0 / 3.0) * r * sr * np.where(r > 0, phase, 0.0) + (2.0 / 3.0) * 1j * a * p0
    p1 = np.where(a > 0, p1, (2.0 / 3.0) * r * sr + 0j)
    return p0, p1


def duhamel_point_source(x, g, delta: float, chunk: int = 128) -> np.ndarray:
    """``int_0^t (t-s)^(-1/2) exp(i x^2 / 4(t-s)) g(s) ds`` at ``t = n delta``.

    ``g`` holds the density at ``s = 0, delta, ..., n delta`` and is taken
    piecewise linear in ``s``.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=np.complex128)
    n = g.size - 1
    out = np.zeros(x.size, dtype=np.complex128)
    if n == 0:
        return out
    r = delta * np.arange(n + 1)
    # subinterval j covers r in [(n-j-1) delta, (n-j) delta]
    g_left = g[:-1][::-1]  # g_j ordered by lag m = 1..n
    g_right = g[1:][::-1]
    m_delta = r[1:]
    for lo in range(0, x.size, chunk):
        a = 0.25 * x[lo : lo + chunk] ** 2
        p0, p1 = _antiderivatives(a, r)
        d0 = p0[:, 1:] - p0[:, :-1]
        d1 = p1[:, 1:] - p1[:, :-1]
        slope = (m_delta * d0 - d1) / delta
        out[lo : lo + chunk] = (d0 - slope) @ g_left + slope @ g_right
    return out
