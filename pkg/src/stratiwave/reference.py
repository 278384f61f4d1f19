"""Reference wave generators.

Ground-truth flows used to exercise the recovery pipeline:

* exact laminar (x-independent) flows from a shooting solve of the
  height-function ODE;
* closed-form manufactured waves for linear Bernoulli functions, which
  satisfy the interior equation exactly (but not the dynamic surface
  condition -- they are interior/surface-root oracles only);
* a damped Newton iteration for the full discretized height-function
  free-boundary problem, plus the discrete bifurcation head finder that
  locates genuinely x-dependent solutions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import spsolve

from .axis import AxisData, WaveParameters
from .errors import (
    DivergenceError,
    NoLaminarFlowError,
    StagnationError,
    StructuralError,
)
from .profiles import BernoulliFunction, DensityProfile, poly_eval
from .series import ChebGrid, NodalFunction


# ---------------------------------------------------------------------------
# Laminar flows (continuum, shooting)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaminarFlow:
    """Laminar solution H(p) on a dense grid, p in [p0, 0]."""

    ps: np.ndarray           # ascending from p0 to 0
    height: np.ndarray       # H at ps
    slope: np.ndarray        # H' at ps
    p0: float
    d: float
    q_head: float
    g: float

    def height_spline(self) -> CubicSpline:
        return CubicSpline(self.ps, self.height)

    def slope_spline(self) -> CubicSpline:
        return CubicSpline(self.ps, self.slope)

    def p_of_y(self) -> CubicSpline:
        # H is strictly increasing, so interpolate the inverse directly
        return CubicSpline(self.height, self.ps)

    def stream_on_axis(self, y) -> np.ndarray:
        """a0(y) = -p(y): the axis stream function of the laminar flow."""
        return -self.p_of_y()(np.asarray(y, dtype=float) + self.d)

    def params(self, c: float, p_atm: float = 0.0) -> WaveParameters:
        return WaveParameters(c=c, d=self.d, g=self.g, p_atm=p_atm,
                              p0=self.p0, q_head=self.q_head)


def laminar_axis_data(
    flow: LaminarFlow,
    rho: DensityProfile,
    c: float,
    m: int,
    p_atm: float = 0.0,
) -> AxisData:
    """Sample u(0, y) of a laminar flow at m Chebyshev nodes on [-d, 0]."""
    grid = ChebGrid(m, -flow.d, 0.0)
    p_at = flow.p_of_y()(grid.nodes + flow.d)
    hp = flow.slope_spline()(p_at)
    u = c - 1.0 / (rho.sqrt_density(p_at) * hp)
    return AxisData(u=NodalFunction(grid, u), c=c, g=flow.g, p_atm=p_atm)


def _laminar_rhs(rho: DensityProfile, beta: BernoulliFunction, d: float, g: float):
    def rhs(p, state):
        h, hp = state
        phi = poly_eval(beta.beta, 0, -p) - g * (h - d) * rho.density_derivative(p)
        return np.array([hp, -phi * hp**3])
    return rhs


def _integrate_laminar(rhs, p0: float, s0: float, n_steps: int):
    """RK4 for the laminar ODE from p0 to 0; returns (ps, H, H')."""
    ps = np.linspace(p0, 0.0, n_steps + 1)
    h = -p0 / n_steps
    out = np.empty((n_steps + 1, 2))
    state = np.array([0.0, s0])
    out[0] = state
    for i in range(n_steps):
        p = ps[i]
        k1 = rhs(p, state)
        k2 = rhs(p + 0.5 * h, state + 0.5 * h * k1)
        k3 = rhs(p + 0.5 * h, state + 0.5 * h * k2)
        k4 = rhs(p + h, state + h * k3)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(state)) or state[1] <= 0.0:
            return ps, None, None
        out[i + 1] = state
    return ps, out[:, 0], out[:, 1]


def solve_laminar(
    rho: DensityProfile,
    beta: BernoulliFunction,
    d: float,
    q_head: float,
    g: float = 9.8,
    n_steps: int = 4000,
    tol: float = 1e-12,
    max_iter: int = 60,
) -> LaminarFlow:
    """Laminar flow for given depth d and head Q by shooting.

    Integrates H'' + [beta(-p) - g(H-d) rho'(p)] H'^3 = 0 upward from the
    bed and drives the residual pair (surface condition, H(0) - d) to
    ``tol`` with a damped Newton iteration over the unknowns (p0, H'(p0)).
    """
    rho0 = rho.density(0.0)
    if q_head - 2.0 * g * rho0 * d <= 0.0:
        raise NoLaminarFlowError(
            f"head Q = {q_head:g} admits no laminar flow of depth {d:g}"
        )
    # Initial guess from the equivalent surface-down initial value problem
    # for the axis stream function: a'' = g y rho'(-a) - beta(a), a(0) = 0,
    # a'(0) = -sqrt(Q - 2 g rho(0) d).  Shooting upward from a poor bed
    # guess blows up in finite p, so start the Newton from this instead.
    a, ap = 0.0, -math.sqrt(q_head - 2.0 * g * rho0 * d)
    hy = -d / n_steps
    yv = 0.0
    for _ in range(n_steps):
        def f_axis(y_, s_):
            return np.array([
                s_[1],
                g * y_ * rho.density_derivative(-s_[0]) - poly_eval(
                    beta.beta, 0, s_[0]),
            ])
        state = np.array([a, ap])
        k1 = f_axis(yv, state)
        k2 = f_axis(yv + 0.5 * hy, state + 0.5 * hy * k1)
        k3 = f_axis(yv + 0.5 * hy, state + 0.5 * hy * k2)
        k4 = f_axis(yv + hy, state + hy * k3)
        state = state + (hy / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        a, ap = state
        yv += hy
        if not (np.isfinite(a) and np.isfinite(ap)) or ap >= 0.0:
            raise NoLaminarFlowError("laminar initial value problem diverged")
    v = np.array([-a, -1.0 / ap])  # (p0, H'(p0)) with H' = -1/a0'
    rhs = _laminar_rhs(rho, beta, d, g)

    def residual(vv):
        p0, s0 = vv
        if p0 >= -1e-12 or s0 <= 0.0:
            return None
        _, hh, hp = _integrate_laminar(rhs, p0, s0, n_steps)
        if hh is None:
            return None
        r1 = 1.0 + hp[-1] ** 2 * (2.0 * g * rho0 * hh[-1] - q_head)
        r2 = hh[-1] - d
        return np.array([r1, r2])

    r = residual(v)
    if r is None:
        raise NoLaminarFlowError("laminar shooting failed from the initial guess")
    for _ in range(max_iter):
        if np.max(np.abs(r)) <= tol:
            break
        jac = np.empty((2, 2))
        for k in range(2):
            step = 1e-7 * max(1.0, abs(v[k]))
            vp, vm = v.copy(), v.copy()
            vp[k] += step
            vm[k] -= step
            rp, rm = residual(vp), residual(vm)
            if rp is None or rm is None:
                raise NoLaminarFlowError("laminar shooting left the admissible set")
            jac[:, k] = (rp - rm) / (2.0 * step)
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise NoLaminarFlowError("singular shooting Jacobian") from exc
        t = 1.0
        while t > 1e-6:
            r_new = residual(v + t * delta)
            if r_new is not None and np.max(np.abs(r_new)) <= (
                1.0 - 1e-4 * t
            ) * np.max(np.abs(r)):
                break
            t *= 0.5
        else:
            raise NoLaminarFlowError("laminar shooting stalled (unphysical Q/d?)")
        v = v + t * delta
        r = r_new
    else:
        raise NoLaminarFlowError(
            f"laminar shooting did not reach tol {tol:g}; best {np.max(np.abs(r)):g}"
        )
    ps, hh, hp = _integrate_laminar(rhs, v[0], v[1], n_steps)
    return LaminarFlow(ps=ps, height=hh, slope=hp, p0=float(v[0]), d=d,
                       q_head=q_head, g=g)


# ---------------------------------------------------------------------------
# Manufactured waves (linear Bernoulli function, constant density)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManufacturedWave:
    """Closed-form interior solution psi = f(y) + eps cos(x) g(y).

    With unit density and beta(psi) = lam * psi the interior equation
    becomes Laplacian(psi) = -lam psi, separated by f'' = -lam f and
    g'' = (1 - lam) g.  The dynamic surface condition does not hold, so
    this field serves as an interior-recursion and surface-root oracle
    only.
    """

    lam: float
    eps: float
    d: float
    g: float
    c: float
    p_atm: float
    eta0: float
    k1: float
    k2: float
    p0: float
    q_head: float

    def f(self, y):
        return -np.sinh(self.k1 * np.asarray(y, dtype=float))

    def g_profile(self, y):
        return np.cosh(self.k2 * (np.asarray(y, dtype=float) + self.d))

    def psi(self, x, y):
        return self.f(y) + self.eps * np.cos(x) * self.g_profile(y)

    def psi_x(self, x, y):
        return -self.eps * np.sin(x) * self.g_profile(y)

    def psi_y(self, x, y):
        y = np.asarray(y, dtype=float)
        return (-self.k1 * np.cosh(self.k1 * y)
                + self.eps * np.cos(x) * self.k2 * np.sinh(self.k2 * (y + self.d)))

    def velocity(self, x, y):
        return self.c + self.psi_y(x, y), -self.psi_x(x, y)

    def energy(self, x, y):
        e_surf = self.q_head / 2.0 + self.p_atm - self.g * self.d
        return e_surf - 0.5 * self.lam * self.psi(x, y) ** 2

    def pressure(self, x, y):
        u, v = self.velocity(x, y)
        return (self.energy(x, y)
                - 0.5 * ((u - self.c) ** 2 + v**2)
                - self.g * np.asarray(y, dtype=float))

    def axis_data(self, m: int) -> AxisData:
        grid = ChebGrid(m, -self.d, self.eta0)
        u = self.c + self.psi_y(0.0, grid.nodes)
        return AxisData(u=NodalFunction(grid, u), c=self.c, g=self.g,
                        p_atm=self.p_atm)

    def params(self) -> WaveParameters:
        return WaveParameters(c=self.c, d=self.d, g=self.g, p_atm=self.p_atm,
                              p0=self.p0, q_head=self.q_head)


def bisect_secant(fn, lo: float, hi: float, tol: float = 1e-12,
                  max_iter: int = 200) -> float:
    """Root of fn on [lo, hi]: bisection bracket, then secant polish.

    Requires a sign change on the bracket; polishes until |fn| <= tol.
    """
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise ValueError("no sign change on the bracket")
    a, b, fa, fb = lo, hi, f_lo, f_hi
    for _ in range(60):
        mid = 0.5 * (a + b)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if fa * fm < 0.0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    x0, x1, f0, f1 = a, b, fa, fb
    for _ in range(max_iter):
        if abs(f1) <= tol:
            return x1
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        x2 = min(max(x2, lo), hi)
        x0, f0, x1, f1 = x1, f1, x2, fn(x2)
    if abs(f1) <= tol:
        return x1
    raise ValueError(f"secant polish stalled, |f| = {abs(f1):g}")


def manufacture_linear_wave(
    lam: float,
    eps: float,
    d: float,
    g: float = 9.8,
    c: float = 0.0,
    p_atm: float = 0.0,
) -> ManufacturedWave:
    """Closed-form wave for beta(psi) = lam*psi, unit density.

    Requires lam < 0; raises StagnationError when eps is large enough to
    produce psi_y >= 0 somewhere on the strip.
    """
    if not lam < 0.0:
        raise ValueError("lam must be negative")
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    k1 = math.sqrt(-lam)
    k2 = math.sqrt(1.0 - lam)

    def psi0(y):
        return -math.sinh(k1 * y) + eps * math.cosh(k2 * (y + d))

    hi = 0.0
    f_hi = psi0(hi)
    while f_hi > 0.0:
        hi += 0.1 * d
        if hi > 0.9 * d:
            raise StagnationError("surface escaped: eps too large for this depth")
        f_hi = psi0(hi)
    eta0 = bisect_secant(psi0, hi - 0.1 * d if hi > 0 else -0.1 * d, hi) if f_hi != 0.0 else hi

    ys = np.linspace(-d, eta0, 2001)
    worst = np.max(-k1 * np.cosh(k1 * ys) + eps * k2 * np.abs(np.sinh(k2 * (ys + d))))
    if worst >= 0.0:
        raise StagnationError("amplitude too large: psi_y >= 0 inside the strip")

    p0 = -(math.sinh(k1 * d) + eps)  # -psi(0, -d)
    u_surf_rel = -k1 * math.cosh(k1 * eta0) + eps * k2 * math.sinh(k2 * (eta0 + d))
    q_head = u_surf_rel**2 + 2.0 * g * (eta0 + d)
    return ManufacturedWave(lam=lam, eps=eps, d=d, g=g, c=c, p_atm=p_atm,
                            eta0=eta0, k1=k1, k2=k2, p0=p0, q_head=q_head)


# ---------------------------------------------------------------------------
# Height-function fields and the Newton solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeightField:
    """h(q, p) on a uniform grid: q on [-pi, pi), p on [p0, 0].

    ``h`` has shape (nq, np+1); column j = 0 is the bed row p = p0.
    """

    q_nodes: np.ndarray
    p_nodes: np.ndarray
    h: np.ndarray
    params: WaveParameters

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.shape != (len(self.q_nodes), len(self.p_nodes)):
            raise StructuralError("height matrix does not match the grid")
        h.flags.writeable = False
        object.__setattr__(self, "h", h)
        for name in ("q_nodes", "p_nodes"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def nq(self) -> int:
        return len(self.q_nodes)

    @property
    def n_p(self) -> int:
        return len(self.p_nodes) - 1

    @property
    def dq(self) -> float:
        return 2.0 * np.pi / self.nq

    @property
    def dp(self) -> float:
        return float(self.p_nodes[1] - self.p_nodes[0])

    def bottom_deviation(self) -> float:
        return float(np.max(np.abs(self.h[:, 0])))

    def crest_shifted(self) -> "HeightField":
        """Roll the grid so the surface maximum sits at q = 0."""
        i_crest = int(np.argmax(self.h[:, -1]))
        i_zero = int(np.argmin(np.abs(self.q_nodes)))
        shift = i_zero - i_crest
        if shift == 0:
            return self
        return HeightField(self.q_nodes, self.p_nodes,
                           np.roll(self.h, shift, axis=0), self.params)

    def with_h(self, h: np.ndarray) -> "HeightField":
        return HeightField(self.q_nodes, self.p_nodes, h, self.params)


def height_grid(nq: int, n_p: int, p0: float) -> tuple[np.ndarray, np.ndarray]:
    if p0 >= 0.0:
        raise ValueError("p0 must be negative")
    q = -np.pi + np.arange(nq) * (2.0 * np.pi / nq)
    p = np.linspace(p0, 0.0, n_p + 1)
    return q, p


def _fd_weights_4th(n: int, dx: float) -> np.ndarray:
    """Rows of 4th-order first-derivative weights on a uniform grid."""
    w = np.zeros((n, n))
    c = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * dx)
    for i in range(2, n - 2):
        w[i, i - 2:i + 3] = c
    w[0, :5] = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * dx)
    w[1, :5] = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / (12.0 * dx)
    w[n - 1, n - 5:] = -np.array([-25.0, 48.0, -36.0, 16.0, -3.0])[::-1] / (12.0 * dx)
    w[n - 2, n - 5:] = -np.array([-3.0, -10.0, 18.0, -6.0, 1.0])[::-1] / (12.0 * dx)
    return w


def sample_axis_from_height(
    field: HeightField,
    rho: DensityProfile,
    c: float,
    m: int,
    p_atm: float = 0.0,
) -> AxisData:
    """Axis data u(0, y), eta(0) from the crest column of a height field.

    The grid is crest-shifted first; h_p along the crest column uses
    fourth-order finite differences (the second-order stencils of the
    field equations are too coarse to reproduce closed-form axis data).
    """
    shifted = field.crest_shifted()
    i0 = int(np.argmin(np.abs(shifted.q_nodes)))
    col = shifted.h[i0]
    n = len(col)
    if n < 7:
        raise StructuralError("need at least 7 p-levels to sample the axis")
    w = _fd_weights_4th(n, shifted.dp)
    hp = w @ col
    if np.any(hp <= 0.0):
        j = int(np.argmax(hp <= 0.0))
        raise StagnationError(
            f"h_p <= 0 on the crest column at p = {shifted.p_nodes[j]:.6g}"
        )
    d = shifted.params.d
    ys = col - d
    u = c - 1.0 / (rho.sqrt_density(shifted.p_nodes) * hp)
    eta0 = float(col[-1] - d)
    grid = ChebGrid(m, -d, eta0)
    spline = CubicSpline(ys, u)
    vals = spline(grid.nodes)
    vals[0] = u[-1]   # surface node coincides with the top sample
    vals[-1] = u[0]   # bed node coincides with the bottom sample
    return AxisData(u=NodalFunction(grid, vals), c=c, g=shifted.params.g,
                    p_atm=p_atm)


def _stencil_values(h: np.ndarray, dq: float, dp: float):
    """Centered interior differences on the periodic-in-q grid."""
    hq = (np.roll(h, -1, axis=0) - np.roll(h, 1, axis=0)) / (2.0 * dq)
    hqq = (np.roll(h, -1, axis=0) - 2.0 * h + np.roll(h, 1, axis=0)) / dq**2
    hp = np.zeros_like(h)
    hpp = np.zeros_like(h)
    hp[:, 1:-1] = (h[:, 2:] - h[:, :-2]) / (2.0 * dp)
    hpp[:, 1:-1] = (h[:, 2:] - 2.0 * h[:, 1:-1] + h[:, :-2]) / dp**2
    hqp = (np.roll(hp, -1, axis=0) - np.roll(hp, 1, axis=0)) / (2.0 * dq)
    return hq, hp, hqq, hpp, hqp


def height_residual_and_jacobian(
    field: HeightField,
    rho: DensityProfile,
    beta: BernoulliFunction,
    q_head: float | None = None,
    check_stagnation: bool = True,
):
    """Discrete residual of the height-function system and its Jacobian.

    Second-order central differences in q (periodic) and p; second-order
    one-sided h_p in the top boundary residual.  The Jacobian is returned
    as a CSR matrix over the unknowns h[:, 1:] (the bed row is Dirichlet).
    Raises StagnationError when a stencil sees h_p <= 0.
    """
    if q_head is None:
        q_head = field.params.q_head
    if q_head is None:
        raise ValueError("head constant Q is required")
    h = field.h
    nq, n_p = field.nq, field.n_p
    dq, dp = field.dq, field.dp
    g = field.params.g
    d = field.params.d
    p = field.p_nodes
    if field.bottom_deviation() > 0.0:
        raise StructuralError("bottom row must satisfy h = 0 exactly")

    hq, hp, hqq, hpp, hqp = _stencil_values(h, dq, dp)
    hp_top = (3.0 * h[:, -1] - 4.0 * h[:, -2] + h[:, -3]) / (2.0 * dp)
    rho0 = rho.density(0.0)

    if check_stagnation:
        interior_hp = hp[:, 1:-1]
        if np.any(interior_hp <= 0.0) or np.any(hp_top <= 0.0):
            raise StagnationError("h_p <= 0 at a stencil: ellipticity lost")

    beta_p = poly_eval(beta.beta, 0, -p)[None, :]
    rho_p = poly_eval(rho.rho, 1, p)[None, :]
    phi = beta_p - g * (h - d) * rho_p

    res = np.zeros((nq, n_p))
    interior = ((1.0 + hq**2) * hpp - 2.0 * hq * hp * hqp + hp**2 * hqq
                + phi * hp**3)
    res[:, : n_p - 1] = interior[:, 1:-1]
    res[:, n_p - 1] = 1.0 + hq[:, -1] ** 2 + hp_top**2 * (
        2.0 * g * rho0 * h[:, -1] - q_head
    )

    # Jacobian over unknowns u(i, j) = i*n_p + (j-1), j = 1..n_p
    rows, cols, vals = [], [], []

    def unk(i, j):
        return (i % nq) * n_p + (j - 1)

    i_idx = np.arange(nq)
    for j in range(1, n_p):
        sl = (slice(None), j)
        dF_dhpp = 1.0 + hq[sl] ** 2
        dF_dhqq = hp[sl] ** 2
        dF_dhqp = -2.0 * hq[sl] * hp[sl]
        dF_dhq = 2.0 * hq[sl] * hpp[sl] - 2.0 * hp[sl] * hqp[sl]
        dF_dhp = (-2.0 * hq[sl] * hqp[sl] + 2.0 * hp[sl] * hqq[sl]
                  + 3.0 * phi[sl] * hp[sl] ** 2)
        dF_dh = -g * rho_p[0, j] * hp[sl] ** 3
        row = unk(i_idx, j)

        def add(ii, jj, vv):
            if jj >= 1:
                rows.append(row)
                cols.append(unk(ii, jj))
                vals.append(vv)

        add(i_idx, j, dF_dh - 2.0 * dF_dhpp / dp**2 - 2.0 * dF_dhqq / dq**2)
        add(i_idx, j + 1, dF_dhpp / dp**2 + dF_dhp / (2.0 * dp))
        add(i_idx, j - 1, dF_dhpp / dp**2 - dF_dhp / (2.0 * dp))
        add(i_idx + 1, j, dF_dhqq / dq**2 + dF_dhq / (2.0 * dq))
        add(i_idx - 1, j, dF_dhqq / dq**2 - dF_dhq / (2.0 * dq))
        cross = dF_dhqp / (4.0 * dq * dp)
        add(i_idx + 1, j + 1, cross)
        add(i_idx - 1, j - 1, cross)
        add(i_idx + 1, j - 1, -cross)
        add(i_idx - 1, j + 1, -cross)

    # top boundary row j = n_p
    j = n_p
    dG_dhq = 2.0 * hq[:, -1]
    dG_dhp = 2.0 * hp_top * (2.0 * g * rho0 * h[:, -1] - q_head)
    dG_dh = 2.0 * g * rho0 * hp_top**2
    row = unk(i_idx, j)
    rows.append(row); cols.append(unk(i_idx, j)); vals.append(
        dG_dh + dG_dhp * 3.0 / (2.0 * dp))
    rows.append(row); cols.append(unk(i_idx, j - 1)); vals.append(
        np.full(nq, -4.0 / (2.0 * dp)) * dG_dhp)
    rows.append(row); cols.append(unk(i_idx, j - 2)); vals.append(
        np.full(nq, 1.0 / (2.0 * dp)) * dG_dhp)
    rows.append(row); cols.append(unk(i_idx + 1, j)); vals.append(
        dG_dhq / (2.0 * dq))
    rows.append(row); cols.append(unk(i_idx - 1, j)); vals.append(
        -dG_dhq / (2.0 * dq))

    rows = np.concatenate([np.asarray(r) for r in rows])
    cols = np.concatenate([np.asarray(c) for c in cols])
    vals = np.concatenate([np.broadcast_to(v, (nq,)) if np.ndim(v) == 0
                           else np.asarray(v) for v in vals])
    n_unknown = nq * n_p
    jac = sparse.csr_matrix((vals, (rows, cols)), shape=(n_unknown, n_unknown))
    return res, jac


@dataclass(frozen=True)
class NewtonLog:
    iterations: int
    residuals: tuple[float, ...]
    steps: tuple[float, ...]
    converged: bool

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residuals": list(self.residuals),
            "steps": list(self.steps),
            "converged": self.converged,
        }


def solve_height_newton(
    init: HeightField,
    rho: DensityProfile,
    beta: BernoulliFunction,
    q_head: float | None = None,
    max_iter: int = 15,
    tol: float = 1e-10,
) -> tuple[HeightField, NewtonLog]:
    """Damped Newton iteration on the discrete height-function system.

    Halving line search on the sup residual; returns the final field and
    an iteration log.  Non-convergence is reported in the log, not raised
    (the caller decides whether that is fatal).
    """
    if q_head is None:
        q_head = init.params.q_head
    field = init
    res, jac = height_residual_and_jacobian(field, rho, beta, q_head)
    res_norm = float(np.max(np.abs(res)))
    residuals = [res_norm]
    steps: list[float] = []
    iterations = 0
    for _ in range(max_iter):
        if res_norm <= tol:
            break
        delta = spsolve(jac.tocsc(), -res.ravel())
        if not np.all(np.isfinite(delta)):
            raise DivergenceError("Newton step is non-finite")
        t = 1.0
        while True:
            h_new = field.h.copy()
            h_new[:, 1:] += t * delta.reshape(field.nq, field.n_p)
            try:
                trial = field.with_h(h_new)
                res_new, jac_new = height_residual_and_jacobian(
                    trial, rho, beta, q_head)
                new_norm = float(np.max(np.abs(res_new)))
            except StagnationError:
                new_norm = math.inf
            if new_norm <= (1.0 - 1e-4 * t) * res_norm or t <= 1.0 / 64.0:
                break
            t *= 0.5
        if not math.isfinite(new_norm):
            raise DivergenceError("Newton line search hit a stagnating iterate")
        field, res, jac, res_norm = trial, res_new, jac_new, new_norm
        iterations += 1
        residuals.append(res_norm)
        steps.append(t)
    log = NewtonLog(iterations=iterations, residuals=tuple(residuals),
                    steps=tuple(steps), converged=res_norm <= tol)
    params = field.params if field.params.q_head is not None else \
        field.params.with_head(q_head)
    field = HeightField(field.q_nodes, field.p_nodes, field.h,
                        params.with_head(q_head))
    return field, log


# ---------------------------------------------------------------------------
# Discrete laminar solutions and the bifurcation head
# ---------------------------------------------------------------------------

def discrete_laminar_column(
    rho: DensityProfile,
    beta: BernoulliFunction,
    p0: float,
    q_head: float,
    n_p: int,
    g: float = 9.8,
    d: float | None = None,
    s_init: float | None = None,
    tol: float = 1e-13,
) -> np.ndarray:
    """q-independent root of the *discrete* height system on the p-grid.

    This is the exact laminar solution of the 2-D scheme (all q-stencils
    vanish on q-constant fields).  ``d`` enters only through the density
    gradient term and may be left None for constant density.
    """
    p = np.linspace(p0, 0.0, n_p + 1)
    dp = -p0 / n_p
    rho0 = rho.density(0.0)
    if s_init is None:
        if q_head + 2.0 * g * rho0 * p0 <= 0.0:  # Q - 2 g rho0 |p0| s ...
            s_init = 0.5
        else:
            s_init = 1.0 / math.sqrt(max(q_head - 2.0 * g * rho0 * (-p0), 0.25))
    if d is None:
        d = 0.0
        if not (rho.rho.degree == 0):
            raise ValueError("d is required for non-constant density")
    col = s_init * (p - p0)

    beta_p = poly_eval(beta.beta, 0, -p)
    rho_p = poly_eval(rho.rho, 1, p)

    def residual(cv):
        hp = np.zeros(n_p + 1)
        hpp = np.zeros(n_p + 1)
        hp[1:-1] = (cv[2:] - cv[:-2]) / (2.0 * dp)
        hpp[1:-1] = (cv[2:] - 2.0 * cv[1:-1] + cv[:-2]) / dp**2
        hp_top = (3.0 * cv[-1] - 4.0 * cv[-2] + cv[-3]) / (2.0 * dp)
        phi = beta_p - g * (cv - d) * rho_p
        r = np.empty(n_p)
        r[: n_p - 1] = (hpp + phi * hp**3)[1:-1]
        r[n_p - 1] = 1.0 + hp_top**2 * (2.0 * g * rho0 * cv[-1] - q_head)
        return r

    v = col[1:].copy()
    for _ in range(80):
        cv = np.concatenate([[0.0], v])
        r = residual(cv)
        if np.max(np.abs(r)) <= tol:
            return cv
        jac = np.empty((n_p, n_p))
        base = r
        for k in range(n_p):
            step = 1e-7 * max(1.0, abs(v[k]))
            vp = v.copy()
            vp[k] += step
            jac[:, k] = (residual(np.concatenate([[0.0], vp])) - base) / step
        try:
            v = v + np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise NoLaminarFlowError("discrete laminar Jacobian singular") from exc
    raise NoLaminarFlowError("discrete laminar iteration did not converge")


def laminar_height_field(
    column: np.ndarray,
    nq: int,
    p0: float,
    params: WaveParameters,
) -> HeightField:
    q, p = height_grid(nq, len(column) - 1, p0)
    h = np.tile(column, (nq, 1))
    return HeightField(q, p, h, params)


def _cos_mode_matrix(
    rho: DensityProfile,
    beta: BernoulliFunction,
    column: np.ndarray,
    p0: float,
    q_head: float,
    nq: int,
    g: float,
    d: float,
) -> np.ndarray:
    """Linearization of the discrete system around a laminar column for a
    cos(q) perturbation; the q second difference contributes the exact
    discrete multiplier -(2 - 2cos(dq))/dq^2."""
    n_p = len(column) - 1
    dp = -p0 / n_p
    dq = 2.0 * np.pi / nq
    k_eff2 = (2.0 - 2.0 * math.cos(dq)) / dq**2
    p = np.linspace(p0, 0.0, n_p + 1)
    rho0 = rho.density(0.0)
    hp = np.zeros(n_p + 1)
    hp[1:-1] = (column[2:] - column[:-2]) / (2.0 * dp)
    hp_top = (3.0 * column[-1] - 4.0 * column[-2] + column[-3]) / (2.0 * dp)
    beta_p = poly_eval(beta.beta, 0, -p)
    rho_p = poly_eval(rho.rho, 1, p)
    phi = beta_p - g * (column - d) * rho_p

    mat = np.zeros((n_p, n_p))

    def col_index(j):
        return j - 1

    for j in range(1, n_p):
        diag = -2.0 / dp**2 - hp[j] ** 2 * k_eff2 - g * rho_p[j] * hp[j] ** 3
        upper = 1.0 / dp**2 + 3.0 * phi[j] * hp[j] ** 2 / (2.0 * dp)
        lower = 1.0 / dp**2 - 3.0 * phi[j] * hp[j] ** 2 / (2.0 * dp)
        r = col_index(j)
        mat[r, r] = diag
        mat[r, col_index(j + 1)] = upper
        if j - 1 >= 1:
            mat[r, col_index(j - 1)] = lower
    dG_dhp = 2.0 * hp_top * (2.0 * g * rho0 * column[-1] - q_head)
    r = col_index(n_p)
    mat[r, r] = 2.0 * g * rho0 * hp_top**2 + dG_dhp * 3.0 / (2.0 * dp)
    mat[r, col_index(n_p - 1)] = dG_dhp * (-4.0) / (2.0 * dp)
    mat[r, col_index(n_p - 2)] = dG_dhp * 1.0 / (2.0 * dp)
    return mat


def critical_head(
    rho: DensityProfile,
    beta: BernoulliFunction,
    p0: float,
    nq: int,
    n_p: int,
    g: float = 9.8,
    d: float | None = None,
    bracket: tuple[float, float] | None = None,
    s_init: float | None = None,
    bisections: int = 80,
) -> float:
    """Head Q* at which the cos(q) mode of the discrete laminar solution
    turns neutral (the grid-exact bifurcation point).

    Locates the sign change of det of the 1-D mode linearization by
    bisection; ``bracket`` defaults to a scan around the constant-density
    dispersion estimate.
    """
    rho0 = rho.density(0.0)
    dd = d if d is not None else 0.0

    def det_sign(q_head):
        col = discrete_laminar_column(rho, beta, p0, q_head, n_p, g=g,
                                      d=d, s_init=s_init)
        mat = _cos_mode_matrix(rho, beta, col, p0, q_head, nq, g, dd)
        sign, _ = np.linalg.slogdet(mat)
        return sign

    if bracket is None:
        s_star = math.sqrt(1.0 / (g * math.tanh(-p0 * 0.4)))  # loose start
        q_mid = 2.0 * g * rho0 * (-p0) * s_star + 1.0 / s_star**2
        bracket = (0.7 * q_mid, 1.4 * q_mid)
    lo, hi = bracket
    s_lo, s_hi = det_sign(lo), det_sign(hi)
    if s_lo == s_hi:
        raise NoLaminarFlowError(
            "no cos-mode sign change inside the head bracket")
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        s_mid = det_sign(mid)
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def cosine_seed(
    column: np.ndarray,
    nq: int,
    p0: float,
    params: WaveParameters,
    amplitude: float = 1e-3,
) -> HeightField:
    """Laminar column tiled over q plus amplitude*cos(q)*(p - p0)/(-p0)."""
    q, p = height_grid(nq, len(column) - 1, p0)
    ramp = (p - p0) / (-p0)
    h = np.tile(column, (nq, 1)) + amplitude * np.cos(q)[:, None] * ramp[None, :]
    return HeightField(q, p, h, params)


def height_field_from_stream(
    psi_fn,
    p0: float,
    d: float,
    nq: int,
    n_p: int,
    params: WaveParameters,
    y_pad: float = 0.75,
) -> HeightField:
    """Sample h(q, p) from a stream-function callable by level-set roots.

    For each grid point, solves psi(q, y) = -p for y by vectorized
    bisection with a Newton-free polish; psi must be strictly decreasing
    in y over the bracket.
    """
    q, p = height_grid(nq, n_p, p0)
    qq, pp = np.meshgrid(q, p, indexing="ij")
    lo = np.full_like(qq, -d - y_pad)
    hi = np.full_like(qq, d * 0.95)
    target = -pp
    f_lo = psi_fn(qq, lo) - target
    f_hi = psi_fn(qq, hi) - target
    if np.any(f_lo * f_hi > 0.0):
        raise StructuralError("level-set bracket does not straddle the root")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = psi_fn(qq, mid) - target
        neg = fm <= 0.0  # psi decreasing: root above where fm > 0
        hi = np.where(neg, mid, hi)
        lo = np.where(neg, lo, mid)
    y = 0.5 * (lo + hi)
    return HeightField(q, p, y + d, params)
