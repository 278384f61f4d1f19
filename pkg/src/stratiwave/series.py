"""Even truncated power series in x with nodal coefficient functions.

An :class:`EvenSeries` stores psi(x, y) = sum_n a_{2n}(y) * x^(2n) up to
a truncation order N.  Each coefficient a_{2n} is a :class:`NodalFunction`
sampled on a shared Chebyshev-Gauss-Lobatto grid in y.  Odd powers have
no storage, so evenness in x holds structurally (and bitwise under
evaluation, since only x*x enters).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import chebyshev as cheb
from .errors import DomainError, InsufficientDataError, StructuralError
from .profiles import Polynomial

#: absolute coefficient-norm floor below which a series is treated as
#: laminar / entire by the convergence diagnostics
COEFF_FLOOR = 1e-14


@dataclass(frozen=True)
class ChebGrid:
    """Shared Chebyshev-Gauss-Lobatto grid on [lo, hi]."""

    m: int
    lo: float
    hi: float

    def __post_init__(self):
        if self.m < 4:
            raise StructuralError("grid needs at least 4 nodes")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise StructuralError("grid endpoints must be finite")
        if not self.lo < self.hi:
            raise StructuralError("grid interval must be increasing")

    @property
    def nodes(self) -> np.ndarray:
        return cheb.nodes(self.m, self.lo, self.hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def diff(self) -> np.ndarray:
        return cheb.diff_matrix(self.m, self.lo, self.hi)

    def diff2(self) -> np.ndarray:
        return cheb.diff2_matrix(self.m, self.lo, self.hi)

    def quad_weights(self) -> np.ndarray:
        return cheb.clenshaw_curtis_weights(self.m, self.lo, self.hi)


@dataclass(frozen=True)
class NodalFunction:
    """Function of y held by its values on a :class:`ChebGrid`."""

    grid: ChebGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.m,):
            raise StructuralError("value vector does not match the grid")
        if not np.all(np.isfinite(vals)):
            raise StructuralError("nodal values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __call__(self, y):
        return cheb.barycentric_eval(self.values, self.grid.lo, self.grid.hi, y)

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def diff(self) -> "NodalFunction":
        return NodalFunction(self.grid, self.grid.diff() @ self.values)

    def integral(self) -> float:
        return float(self.grid.quad_weights() @ self.values)


def nodal_diff2(f: NodalFunction) -> NodalFunction:
    """Second y-derivative by the squared spectral differentiation matrix."""
    return NodalFunction(f.grid, f.grid.diff2() @ f.values)


def _same_grid(a: "EvenSeries | NodalFunction", b: "EvenSeries | NodalFunction"):
    if a.grid != b.grid:
        raise StructuralError("operands live on different grids/domains")


@dataclass(frozen=True)
class EvenSeries:
    """Truncated even power series; coeffs[n] multiplies x^(2n)."""

    grid: ChebGrid
    coeffs: tuple[NodalFunction, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise StructuralError("series needs at least the constant term")
        for c in self.coeffs:
            if c.grid != self.grid:
                raise StructuralError("coefficients on mismatched grids")

    @property
    def truncation_order(self) -> int:
        return len(self.coeffs) - 1

    def coeff_matrix(self) -> np.ndarray:
        return np.vstack([c.values for c in self.coeffs])

    def coeff_norms(self) -> np.ndarray:
        return np.array([c.norm_inf() for c in self.coeffs])

    @staticmethod
    def from_matrix(grid: ChebGrid, mat: np.ndarray) -> "EvenSeries":
        return EvenSeries(grid, tuple(NodalFunction(grid, row) for row in mat))

    @staticmethod
    def zero(grid: ChebGrid, order: int) -> "EvenSeries":
        z = np.zeros(grid.m)
        return EvenSeries(grid, tuple(NodalFunction(grid, z) for _ in range(order + 1)))


def series_add(a: EvenSeries, b: EvenSeries, alpha: float = 1.0,
               beta: float = 1.0) -> EvenSeries:
    """Coefficientwise alpha*a + beta*b on a shared grid and order."""
    _same_grid(a, b)
    if a.truncation_order != b.truncation_order:
        raise StructuralError("series truncation orders differ")
    mat = alpha * a.coeff_matrix() + beta * b.coeff_matrix()
    return EvenSeries.from_matrix(a.grid, mat)


def series_mul(a: EvenSeries, b: EvenSeries) -> EvenSeries:
    """Truncated Cauchy product on even indices.

    result_{2n} = sum_{k<=n} a_{2k} * b_{2(n-k)} with pointwise nodal
    products; powers beyond the shared truncation order are discarded.
    """
    _same_grid(a, b)
    if a.truncation_order != b.truncation_order:
        raise StructuralError("series truncation orders differ")
    am, bm = a.coeff_matrix(), b.coeff_matrix()
    n1 = a.truncation_order + 1
    out = np.zeros_like(am)
    for n in range(n1):
        for k in range(n + 1):
            out[n] += am[k] * bm[n - k]
    return EvenSeries.from_matrix(a.grid, out)


def series_scale_const(a: EvenSeries, s: float) -> EvenSeries:
    return EvenSeries.from_matrix(a.grid, s * a.coeff_matrix())


def series_add_scalar(a: EvenSeries, s: float) -> EvenSeries:
    mat = a.coeff_matrix().copy()
    mat[0] += s
    return EvenSeries.from_matrix(a.grid, mat)


def series_compose_poly(f: Polynomial, sign: int, psi: EvenSeries) -> EvenSeries:
    """Even series of f(sign * psi) by Horner recursion.

    Exact up to the truncation order because f is a polynomial.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    arg = psi if sign == 1 else series_scale_const(psi, -1.0)
    c = f.coeffs
    acc = EvenSeries.zero(psi.grid, psi.truncation_order)
    acc = series_add_scalar(acc, c[-1])
    for coef in reversed(c[:-1]):
        acc = series_mul(acc, arg)
        acc = series_add_scalar(acc, coef)
    out = acc.coeff_matrix()
    if not np.all(np.isfinite(out)):
        raise StructuralError("composition produced non-finite values")
    return EvenSeries.from_matrix(psi.grid, out)


def _check_domain(grid: ChebGrid, y) -> None:
    y_arr = np.asarray(y, dtype=float)
    tol = 1e-12 * max(1.0, abs(grid.lo), abs(grid.hi))
    if np.any(y_arr < grid.lo - tol) or np.any(y_arr > grid.hi + tol):
        raise DomainError(
            f"y outside the coefficient domain [{grid.lo:g}, {grid.hi:g}]"
        )


def series_eval(psi: EvenSeries, x, y):
    """Evaluate psi at (x, y); Horner in x^2, barycentric in y.

    Even in x bitwise: only x*x enters the evaluation.
    """
    _check_domain(psi.grid, y)
    vals = np.array([c(y) for c in psi.coeffs])
    t = np.asarray(x, dtype=float)
    t = t * t
    acc = np.zeros_like(t) if t.ndim else 0.0
    for row in vals[::-1]:
        acc = acc * t + row
    return acc


def series_eval_grid(psi: EvenSeries, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Evaluate on a tensor grid; returns shape (len(xs), len(ys))."""
    _check_domain(psi.grid, ys)
    r = cheb.resample_matrix(psi.grid.m, psi.grid.lo, psi.grid.hi,
                             np.asarray(ys, dtype=float))
    coeff_at_y = psi.coeff_matrix() @ r.T          # (N+1, len(ys))
    t = np.asarray(xs, dtype=float) ** 2           # x*x per station
    out = np.zeros((len(t), coeff_at_y.shape[1]))
    for row in coeff_at_y[::-1]:
        out = out * t[:, None] + row[None, :]
    return out


def series_dx_eval(psi: EvenSeries, x, y):
    """d(psi)/dx at (x, y): odd series x * sum 2n a_{2n} t^(n-1)."""
    _check_domain(psi.grid, y)
    vals = np.array([c(y) for c in psi.coeffs])
    t = np.asarray(x, dtype=float)
    t2 = t * t
    acc = np.zeros_like(t2) if t2.ndim else 0.0
    for n in range(psi.truncation_order, 0, -1):
        acc = acc * t2 + 2.0 * n * vals[n]
    return t * acc


def series_dy(psi: EvenSeries) -> EvenSeries:
    """Series of d(psi)/dy via spectral differentiation of coefficients."""
    d = psi.grid.diff()
    mat = psi.coeff_matrix() @ d.T
    return EvenSeries.from_matrix(psi.grid, mat)


def series_laplacian_parts(psi: EvenSeries) -> tuple[EvenSeries, EvenSeries]:
    """(x-part, y-part) of the Laplacian of the series.

    x-part: sum_{n>=1} (2n)(2n-1) a_{2n} x^(2n-2), returned as an even
    series padded with a zero top coefficient; y-part: sum a_{2n}'' x^(2n).
    """
    mat = psi.coeff_matrix()
    n1 = mat.shape[0]
    xpart = np.zeros_like(mat)
    for n in range(1, n1):
        xpart[n - 1] = (2 * n) * (2 * n - 1) * mat[n]
    ypart = np.vstack([nodal_diff2(c).values for c in psi.coeffs])
    return (EvenSeries.from_matrix(psi.grid, xpart),
            EvenSeries.from_matrix(psi.grid, ypart))


def radius_estimate(psi: EvenSeries) -> float:
    """Convergence-radius estimate from coefficient decay.

    Least-squares fit of log||a_{2n}||_inf against 2n over the last
    ceil(N/2) coefficients with norm >= 1e-14; returns ``math.inf`` when
    every coefficient beyond the constant term sits below that floor.
    """
    n_ord = psi.truncation_order
    if n_ord < 3:
        raise InsufficientDataError("radius estimate needs order N >= 3")
    norms = psi.coeff_norms()
    eligible = [n for n in range(1, n_ord + 1) if norms[n] >= COEFF_FLOOR]
    if not eligible:
        return math.inf
    tail = eligible[-math.ceil(n_ord / 2):]
    if len(tail) == 1:
        n = tail[0]
        return float(norms[n] ** (-1.0 / (2 * n)))
    powers = np.array([2.0 * n for n in tail])
    logs = np.log(np.array([norms[n] for n in tail]))
    slope = np.polyfit(powers, logs, 1)[0]
    return float(np.exp(-slope))
