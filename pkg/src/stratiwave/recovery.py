"""Series recovery from axis data.

Builds the full even stream-function series from its axis restriction
a0(y) by matching the interior equation order by order:

    a_{2n} = [ g*y*b_{2n-2} - c_{2n-2} - a''_{2n-2} ] / ((2n)(2n-1)),

where b and c are the even-series expansions of rho'(-psi) and beta(psi)
formed on the partial series (the order-(2n-2) coefficients depend only
on a_0..a_{2n-2}, so the recursion is triangular).

Conditioning.  The recursion is a Cauchy continuation of an elliptic
problem: rounding noise in a coefficient is amplified by roughly the
fourth power of its spectral bandwidth at each step, which in raw double
precision destroys everything beyond the second nontrivial order.  Two
measures keep the computed orders honest:

* each new coefficient is chopped in Chebyshev coefficient space at a
  running noise-floor estimate (spectral-derivative rounding plus a
  Markov-type bound on the carried error of the previous order), which
  keeps the junk bounded instead of exponentially growing;
* the whole recursion is run on a second, coarser node set and orders are
  kept only while the two runs agree; rounding junk is grid-specific and
  decorrelates, genuine coefficients agree.  Later orders are stored as
  exact zeros.

Orders that cannot be distinguished from noise in double precision are
therefore reported as zero rather than as garbage.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import chebyshev as cheb
from .axis import WaveParameters
from .errors import DivergenceError
from .profiles import BernoulliFunction, DensityProfile, poly_derivative, poly_eval
from .series import (
    ChebGrid,
    EvenSeries,
    NodalFunction,
    radius_estimate,
    series_compose_poly,
    series_eval_grid,
    series_laplacian_parts,
)

_EPS = 2.2e-16
#: calibration of the spectral-derivative rounding level (per unit norm)
_NOISE_ALPHA = 2.0
#: fraction of the Markov bound used for carried-error amplification
_MARKOV_FRACTION = 1.0 / 75.0
#: relative disagreement between the two node sets above which an order
#: is declared noise
_AGREE_TOL = 0.25


def _chop(values: np.ndarray, floor_abs: float, grid: ChebGrid):
    """Zero Chebyshev coefficients below ``floor_abs``; return (values, band)."""
    a = cheb.analysis_matrix(grid.m) @ values
    keep = np.abs(a) >= floor_abs
    if not keep.any():
        return np.zeros_like(values), 0
    a = np.where(keep, a, 0.0)
    band = int(np.max(np.nonzero(keep)[0])) + 1
    return cheb.synthesis_matrix(grid.m) @ a, band


def _raw_recursion(
    a0: NodalFunction,
    rho: DensityProfile,
    beta: BernoulliFunction,
    g: float,
    order: int,
    sign: float,
) -> np.ndarray:
    """Single-grid recursion with noise-floor chopping; returns coeff matrix."""
    grid = a0.grid
    map2 = (2.0 / grid.length) ** 2
    noise_scale = _NOISE_ALPHA * _EPS * grid.m**3.5 * map2
    d2 = grid.diff2()
    y = grid.nodes
    rho_prime = poly_derivative(rho.rho)
    mat = np.zeros((order + 1, grid.m))
    mat[0] = a0.values
    carried = 10.0 * _EPS * np.max(np.abs(a0.values))
    band = grid.m
    for n in range(1, order + 1):
        partial = EvenSeries.from_matrix(grid, mat[:n])
        b_series = series_compose_poly(rho_prime, -1, partial)
        c_series = series_compose_poly(beta.beta, +1, partial)
        b_top = b_series.coeffs[n - 1].values
        c_top = c_series.coeffs[n - 1].values
        second = d2 @ mat[n - 1]
        denom = (2.0 * n) * (2.0 * n - 1.0)
        raw = (g * y * b_top + sign * c_top - second) / denom
        if not np.all(np.isfinite(raw)):
            raise DivergenceError(f"recursion diverged at order n = {n}")
        amp = _MARKOV_FRACTION * band**2 * max(band**2 - 1, 1) * map2
        eta = (noise_scale * np.max(np.abs(mat[n - 1])) + carried * amp) / denom
        mat[n], band = _chop(raw, eta, grid)
        carried = 1.5 * eta
    return mat


def recover_series(
    a0: NodalFunction,
    rho: DensityProfile,
    beta: BernoulliFunction,
    params: WaveParameters,
    order: int = 12,
    bernoulli_sign: float = -1.0,
    cross_validate: bool = True,
) -> EvenSeries:
    """Recover the even stream-function series from its axis values.

    ``bernoulli_sign`` is the sign with which the Bernoulli expansion
    enters the recursion; the physical convention is -1 (the interior
    equation reads Laplacian(psi) = g*y*rho'(-psi) - beta(psi)).  The
    +1 variant exists so tests can demonstrate that it is falsified by
    manufactured solutions.

    With ``cross_validate`` the recursion is repeated on a coarser node
    set and trailing orders on which the two node sets disagree (rounding
    noise rather than signal) are zeroed.
    """
    grid = a0.grid
    mat = _raw_recursion(a0, rho, beta, params.g, order, bernoulli_sign)
    if not cross_validate:
        return EvenSeries.from_matrix(grid, mat)

    m2 = max(16, (3 * grid.m) // 4)
    if m2 == grid.m:
        m2 = grid.m - 4
    grid2 = ChebGrid(m2, grid.lo, grid.hi)
    resample_down = cheb.resample_matrix(grid.m, grid.lo, grid.hi, grid2.nodes)
    a0_coarse = NodalFunction(grid2, resample_down @ a0.values)
    mat2 = _raw_recursion(a0_coarse, rho, beta, params.g, order, bernoulli_sign)
    lift = cheb.resample_matrix(m2, grid.lo, grid.hi, grid.nodes)

    n_keep = order
    for n in range(1, order + 1):
        fine = mat[n]
        coarse = lift @ mat2[n]
        scale = max(np.max(np.abs(fine)), np.max(np.abs(coarse)))
        if scale < 1e-300:
            continue  # both grids agree the order vanishes
        if np.max(np.abs(fine - coarse)) > _AGREE_TOL * scale:
            n_keep = n - 1
            break
    mat[n_keep + 1:] = 0.0
    return EvenSeries.from_matrix(grid, mat)


@dataclass(frozen=True)
class ResidualReport:
    sup_residual: float
    sup_laplacian: float
    threshold: float
    x_max: float

    @property
    def passed(self) -> bool:
        return self.sup_residual <= self.threshold

    def to_dict(self) -> dict:
        return {
            "sup_residual": self.sup_residual,
            "sup_laplacian": self.sup_laplacian,
            "threshold": self.threshold,
            "x_max": self.x_max,
            "pass": self.passed,
        }


def pde_residual(
    psi: EvenSeries,
    rho: DensityProfile,
    beta: BernoulliFunction,
    params: WaveParameters,
    nx: int = 41,
    x_max: float | None = None,
    tol_factor: float = 1e-6,
) -> ResidualReport:
    """Interior-equation residual of a recovered series.

    Evaluates Laplacian(psi) - g*y*rho'(-psi) + beta(psi) on an
    ``nx`` x M tensor grid over |x| <= min(0.5, radius/2); the Laplacian
    x-part comes analytically from the coefficients and the y-part from
    the spectral second derivative.
    """
    if x_max is None:
        radius = radius_estimate(psi)
        x_max = min(0.5, radius / 2.0) if np.isfinite(radius) else 0.5
    xs = np.linspace(-x_max, x_max, nx)
    ys = psi.grid.nodes
    xpart, ypart = series_laplacian_parts(psi)
    lap = series_eval_grid(xpart, xs, ys) + series_eval_grid(ypart, xs, ys)
    psi_vals = series_eval_grid(psi, xs, ys)
    rho_prime = poly_derivative(rho.rho)
    rhs = params.g * ys[None, :] * poly_eval(rho_prime, 0, -psi_vals) - poly_eval(
        beta.beta, 0, psi_vals
    )
    sup_res = float(np.max(np.abs(lap - rhs)))
    sup_lap = float(np.max(np.abs(lap)))
    return ResidualReport(
        sup_residual=sup_res,
        sup_laplacian=sup_lap,
        threshold=tol_factor * (1.0 + sup_lap),
        x_max=float(x_max),
    )
