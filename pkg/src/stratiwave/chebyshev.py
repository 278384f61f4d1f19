"""Chebyshev-Gauss-Lobatto collocation utilities.

Nodes on an interval [lo, hi] are the affine images of cos(k*pi/(M-1)),
k = 0..M-1, so they run *descending* from hi to lo.  All matrices are
cached per (M, lo, hi) and returned read-only.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@lru_cache(maxsize=256)
def unit_nodes(m: int) -> np.ndarray:
    """cos(k*pi/(M-1)), k = 0..M-1, descending from 1 to -1."""
    if m < 2:
        raise ValueError("need at least two nodes")
    return _readonly(np.cos(np.arange(m) * np.pi / (m - 1)))


def nodes(m: int, lo: float, hi: float) -> np.ndarray:
    """Mapped Chebyshev-Gauss-Lobatto nodes, descending from hi to lo."""
    t = unit_nodes(m)
    return lo + (t + 1.0) * (hi - lo) / 2.0


@lru_cache(maxsize=256)
def _diff_matrix_unit(m: int) -> np.ndarray:
    # Standard collocation derivative matrix with the negative-sum trick
    # on the diagonal for rounding robustness.
    n = m - 1
    x = unit_nodes(m)
    c = np.ones(m)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** np.arange(m)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(m))
    d = d - np.diag(d.sum(axis=1))
    return _readonly(d)


@lru_cache(maxsize=256)
def diff_matrix(m: int, lo: float, hi: float) -> np.ndarray:
    """First-derivative matrix on the mapped interval."""
    d = _diff_matrix_unit(m) * (2.0 / (hi - lo))
    return _readonly(d)


@lru_cache(maxsize=256)
def diff2_matrix(m: int, lo: float, hi: float) -> np.ndarray:
    """Squared derivative matrix (D @ D) with re-applied negative-sum trick."""
    d = diff_matrix(m, lo, hi)
    d2 = d @ d
    d2 = d2 - np.diag(d2.sum(axis=1))
    return _readonly(d2)


@lru_cache(maxsize=256)
def barycentric_weights(m: int) -> np.ndarray:
    """Barycentric weights for Chebyshev-Gauss-Lobatto nodes."""
    w = np.ones(m)
    w[1::2] = -1.0
    w[0] *= 0.5
    w[-1] *= 0.5
    return _readonly(w)


def barycentric_eval(values: np.ndarray, lo: float, hi: float, y) -> np.ndarray:
    """Evaluate the interpolant of nodal ``values`` at points ``y``.

    Exact (bit-reproducible) at the nodes themselves; stable barycentric
    second form elsewhere.  ``y`` may be a scalar or array.
    """
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    xs = nodes(len(values), lo, hi)
    w = barycentric_weights(len(values))
    diff = y_arr[:, None] - xs[None, :]
    out = np.empty(len(y_arr))
    exact_rows, exact_cols = np.nonzero(diff == 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = w[None, :] / diff
        out[:] = (ratio @ values) / ratio.sum(axis=1)
    out[exact_rows] = values[exact_cols]
    if np.isscalar(y) or np.asarray(y).ndim == 0:
        return float(out[0])
    return out


def resample_matrix(m: int, lo: float, hi: float, targets: np.ndarray) -> np.ndarray:
    """Matrix R with (R @ values) = interpolant evaluated at ``targets``."""
    xs = nodes(m, lo, hi)
    w = barycentric_weights(m)
    diff = np.asarray(targets, dtype=float)[:, None] - xs[None, :]
    hit_rows, hit_cols = np.nonzero(diff == 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = w[None, :] / diff
        r = ratio / ratio.sum(axis=1)[:, None]
    r[hit_rows, :] = 0.0
    r[hit_rows, hit_cols] = 1.0
    return r


@lru_cache(maxsize=256)
def clenshaw_curtis_weights(m: int, lo: float, hi: float) -> np.ndarray:
    """Clenshaw-Curtis quadrature weights matching the node ordering."""
    n = m - 1
    theta = np.arange(m) * np.pi / n
    w = np.zeros(m)
    ii = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2.0 * k * theta[ii]) / (4.0 * k * k - 1)
        v -= np.cos(n * theta[ii]) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2.0 * k * theta[ii]) / (4.0 * k * k - 1)
    w[ii] = 2.0 * v / n
    return _readonly(w * (hi - lo) / 2.0)


@lru_cache(maxsize=256)
def synthesis_matrix(m: int) -> np.ndarray:
    """values = S @ coeffs for Chebyshev coefficients on the CGL grid."""
    n = m - 1
    return _readonly(np.cos(np.outer(np.arange(m), np.arange(m)) * np.pi / n))


@lru_cache(maxsize=256)
def analysis_matrix(m: int) -> np.ndarray:
    """coeffs = A @ values, inverse of :func:`synthesis_matrix` (DCT-I)."""
    n = m - 1
    w = np.ones(m)
    w[0] = w[-1] = 0.5
    a = (2.0 / n) * synthesis_matrix(m) * w[None, :]
    a[0] *= 0.5
    a[-1] *= 0.5
    return _readonly(a)


def coeff_derivative(c: np.ndarray) -> np.ndarray:
    """Chebyshev-coefficient recurrence for the derivative (unit interval)."""
    m = len(c)
    b = np.zeros(m)
    if m >= 2:
        b[m - 2] = 2.0 * (m - 1) * c[m - 1]
        for j in range(m - 3, -1, -1):
            b[j] = b[j + 2] + 2.0 * (j + 1) * c[j + 1]
        b[0] *= 0.5
    return b
