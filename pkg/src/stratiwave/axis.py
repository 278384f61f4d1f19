"""Crest-line data ingestion.

Turns the recovery input data -- relative horizontal velocity sampled on
the axis of symmetry plus the wave height -- into the axis stream
function a0(y) and the pseudo mass flux p0.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DivergenceError, StagnationError, StructuralError
from .profiles import DensityProfile
from .series import ChebGrid, NodalFunction

GRAVITY_DEFAULT = 9.8


@dataclass(frozen=True)
class WaveParameters:
    """Physical constants of a run; p0 and Q are filled once computed."""

    c: float
    d: float
    g: float = GRAVITY_DEFAULT
    p_atm: float = 0.0
    p0: float | None = None
    q_head: float | None = None

    def with_flux(self, p0: float) -> "WaveParameters":
        return replace(self, p0=p0)

    def with_head(self, q_head: float) -> "WaveParameters":
        return replace(self, q_head=q_head)

    def to_dict(self) -> dict:
        return {
            "c": self.c, "d": self.d, "g": self.g, "P_atm": self.p_atm,
            "p0": self.p0, "Q": self.q_head,
        }


@dataclass(frozen=True)
class AxisData:
    """u(0, y) sampled at Chebyshev nodes on [-d, eta(0)], plus constants."""

    u: NodalFunction
    c: float
    g: float = GRAVITY_DEFAULT
    p_atm: float = 0.0

    def __post_init__(self):
        if self.u.grid.hi <= self.u.grid.lo:
            raise StructuralError("axis sample interval is empty")
        if self.u.grid.lo >= 0.0:
            raise StructuralError("axis samples must start at the bed y = -d < 0")

    @property
    def d(self) -> float:
        return -self.u.grid.lo

    @property
    def eta0(self) -> float:
        return self.u.grid.hi

    @property
    def y_nodes(self) -> np.ndarray:
        return self.u.grid.nodes

    def surface_velocity(self) -> float:
        # first node is y = eta(0) in the descending node ordering
        return float(self.u.values[0])

    def params(self) -> WaveParameters:
        return WaveParameters(c=self.c, d=self.d, g=self.g, p_atm=self.p_atm)


def check_no_stagnation(axis: AxisData) -> float:
    """Margin min(c - u) over the samples; raises on stagnation.

    Raises
    ------
    StagnationError
        If u >= c at any sample; the message names the offending y.
    """
    margin = axis.c - axis.u.values
    i = int(np.argmin(margin))
    if margin[i] <= 0.0:
        raise StagnationError(
            f"stagnation: u >= c at y = {axis.y_nodes[i]:.10g} "
            f"(margin {margin[i]:.3e})"
        )
    return float(margin[i])


def _rk4_down(f, y_start: float, y_end: float, a_start: float, n_steps: int) -> float:
    """Classical fourth-order one-step integration of a' = f(y, a)."""
    h = (y_end - y_start) / n_steps
    y, a = y_start, a_start
    for _ in range(n_steps):
        k1 = f(y, a)
        k2 = f(y + 0.5 * h, a + 0.5 * h * k1)
        k3 = f(y + 0.5 * h, a + 0.5 * h * k2)
        k4 = f(y + h, a + h * k3)
        a = a + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y = y + h
    return a


def solve_axis_streamfunction(
    axis: AxisData, rho: DensityProfile, substeps: int = 8
) -> tuple[NodalFunction, float]:
    """Integrate a0'(y) = sqrt(rho(-a0)) * (u(0,y) - c) down from the surface.

    The surface condition a0(eta(0)) = 0 starts the integration; the bed
    value fixes the pseudo mass flux p0 = -a0(-d).  The quadrature form of
    the axis integrals is circular (the density depends on the unknown
    a0), so the equivalent initial value problem is integrated instead;
    both agree when the density is constant.

    Integration: node-to-node classical fourth-order steps, about
    ``substeps * M`` in total, with u(0, .) interpolated barycentrically.
    Returns (a0 on the axis grid, p0).
    """
    grid = axis.u.grid
    ys = grid.nodes  # descending from eta0 to -d
    u_fn = axis.u

    def rhs(y, a):
        s = rho.sqrt_density(-a)  # raises ProfileError if non-positive
        return s * (u_fn(y) - axis.c)

    total = max(substeps * grid.m, grid.m)
    a_vals = np.empty(grid.m)
    a_vals[0] = 0.0
    a = 0.0
    for k in range(grid.m - 1):
        seg = ys[k + 1] - ys[k]
        n_seg = max(1, int(np.ceil(abs(seg) / grid.length * total)))
        a = _rk4_down(rhs, ys[k], ys[k + 1], a, n_seg)
        if not np.isfinite(a):
            raise DivergenceError(
                f"axis integration diverged near y = {ys[k + 1]:.6g}"
            )
        a_vals[k + 1] = a
    # a0 must decrease with y; in descending node order that means increase
    if np.any(np.diff(a_vals) <= 0.0):
        j = int(np.argmax(np.diff(a_vals) <= 0.0))
        raise StagnationError(
            f"axis stream function is not strictly monotone near "
            f"y = {ys[j]:.10g}; data violates u < c"
        )
    p0 = -a_vals[-1]
    if not p0 < 0.0:
        raise StagnationError("pseudo mass flux p0 must be negative")
    return NodalFunction(grid, a_vals), p0


def axis_from_samples(
    y: np.ndarray,
    u: np.ndarray,
    c: float,
    g: float = GRAVITY_DEFAULT,
    p_atm: float = 0.0,
    m: int | None = None,
) -> AxisData:
    """Build AxisData from (y, u) samples, re-interpolating if needed.

    If the samples already sit on a Chebyshev-Gauss-Lobatto grid of their
    own span (to 1e-12 relative) they are used verbatim; otherwise they
    are resampled through a cubic spline onto ``m`` Chebyshev nodes.
    """
    from scipy.interpolate import CubicSpline

    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    if y.ndim != 1 or y.shape != u.shape or len(y) < 4:
        raise StructuralError("need matching 1-d arrays of at least 4 samples")
    order = np.argsort(y)[::-1]  # descending like the nodal convention
    y, u = y[order], u[order]
    lo, hi = float(y[-1]), float(y[0])
    grid_guess = ChebGrid(len(y), lo, hi)
    scale = max(abs(lo), abs(hi), 1.0)
    if (m is None or m == len(y)) and np.max(
        np.abs(y - grid_guess.nodes)
    ) <= 1e-12 * scale:
        nodal = NodalFunction(grid_guess, u)
    else:
        m_out = m if m is not None else len(y)
        grid = ChebGrid(m_out, lo, hi)
        spline = CubicSpline(y[::-1], u[::-1])
        nodal = NodalFunction(grid, spline(grid.nodes))
    return AxisData(u=nodal, c=c, g=g, p_atm=p_atm)
