"""Polynomial density and Bernoulli profiles.

The streamline density rho(p) and the Bernoulli function beta(p) are
represented as polynomials in the stream-function variable, so that all
derivatives and antiderivatives needed by the recovery recursion are
exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ProfileError


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial, coefficients in ascending powers."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs):
        arr = [float(c) for c in coeffs]
        if not all(math.isfinite(c) for c in arr):
            raise ValueError("polynomial coefficients must be finite")
        while len(arr) > 1 and arr[-1] == 0.0:
            arr.pop()
        if not arr:
            arr = [0.0]
        object.__setattr__(self, "coeffs", tuple(arr))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)


def poly_eval(f: Polynomial, k: int, p):
    """Evaluate the k-th derivative of ``f`` at ``p`` (scalar or array).

    The derivative is taken by exact coefficient shift, then evaluated by
    Horner's rule; k beyond the degree gives 0.
    """
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    c = f.coeffs
    if k > f.degree:
        return np.zeros_like(np.asarray(p, dtype=float)) if np.ndim(p) else 0.0
    shifted = [c[j] * math.perm(j, k) for j in range(k, len(c))]
    acc = np.zeros_like(np.asarray(p, dtype=float)) if np.ndim(p) else 0.0
    for coef in reversed(shifted):
        acc = acc * p + coef
    return acc


def poly_derivative(f: Polynomial) -> Polynomial:
    if f.degree == 0:
        return Polynomial([0.0])
    return Polynomial([j * f.coeffs[j] for j in range(1, len(f.coeffs))])


def poly_antiderivative(f: Polynomial) -> Polynomial:
    """Antiderivative G with G' = f and G(0) = 0."""
    if f.is_zero():
        return Polynomial([0.0])
    return Polynomial([0.0] + [c / (j + 1) for j, c in enumerate(f.coeffs)])


@dataclass(frozen=True)
class DensityProfile:
    """Streamline density rho(p), kg/m^3, for p in [p0, 0]."""

    rho: Polynomial
    valid_range: tuple[float, float] | None = field(default=None)

    def __post_init__(self):
        if self.valid_range is not None:
            lo, hi = self.valid_range
            if not lo < hi:
                raise ValueError("valid_range must be increasing")

    def density(self, p):
        return poly_eval(self.rho, 0, p)

    def density_derivative(self, p):
        return poly_eval(self.rho, 1, p)

    def sqrt_density(self, p):
        val = self.density(p)
        if np.ndim(val):
            if np.any(val <= 0.0):
                raise ProfileError("density is non-positive inside the fluid")
        elif val <= 0.0:
            raise ProfileError(f"density {val:g} non-positive at p = {p:g}")
        return np.sqrt(val)


@dataclass(frozen=True)
class BernoulliFunction:
    """Bernoulli function beta as a polynomial in the stream-function value."""

    beta: Polynomial

    def __call__(self, psi):
        return poly_eval(self.beta, 0, psi)

    def antiderivative(self) -> Polynomial:
        return poly_antiderivative(self.beta)


@dataclass(frozen=True)
class ProfileCheck:
    name: str
    passed: bool
    worst_p: float
    worst_value: float


@dataclass(frozen=True)
class ProfileReport:
    checks: tuple[ProfileCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def raise_on_failure(self):
        for c in self.checks:
            if not c.passed:
                raise ProfileError(
                    f"profile check '{c.name}' failed: value {c.worst_value:.6g} "
                    f"at p = {c.worst_p:.6g}"
                )

    def to_dict(self) -> dict:
        return {
            c.name: {
                "pass": c.passed,
                "worst_p": c.worst_p,
                "worst_value": c.worst_value,
            }
            for c in self.checks
        }


def validate_profiles(
    rho: DensityProfile, beta: BernoulliFunction, p0: float, n_scan: int = 1000
) -> ProfileReport:
    """Check admissibility of the profiles on [p0, 0] by dense scan.

    Verifies rho > 0 and rho' <= 0 on a uniform scan, plus finiteness of
    both polynomials.  Failures are reported with the worst offending p,
    not raised; see :meth:`ProfileReport.raise_on_failure`.
    """
    if not p0 < 0.0:
        raise ValueError("p0 must be negative")
    ps = np.linspace(p0, 0.0, n_scan)
    dens = poly_eval(rho.rho, 0, ps)
    slope = poly_eval(rho.rho, 1, ps)
    i_min = int(np.argmin(dens))
    i_max = int(np.argmax(slope))
    checks = [
        ProfileCheck("density_positive", bool(dens[i_min] > 0.0), float(ps[i_min]),
                     float(dens[i_min])),
        ProfileCheck("density_nonincreasing", bool(slope[i_max] <= 1e-14),
                     float(ps[i_max]), float(slope[i_max])),
        ProfileCheck(
            "bernoulli_finite",
            all(math.isfinite(c) for c in beta.beta.coeffs),
            0.0,
            0.0,
        ),
    ]
    return ProfileReport(tuple(checks))
