"""Single-interval measures with closed-form functionals, and the two
one-interval optimisation problems they solve exactly.

On [a, b] with m = (a+b)/2, c = (b-a)/2 and g = sqrt(ab) the three building
blocks are

    f(x) = 1 / (pi sqrt((b-x)(x-a)))            equilibrium measure
    g(x) = sqrt(ab) / (pi x sqrt((b-x)(x-a)))   potential log x + const
    h(x) = (m - x) / (pi sqrt((b-x)(x-a)))      mass 0, potential x - m

and a family member is alpha f + beta g + gamma h with beta = 1 - alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

SQRT_E = math.sqrt(math.e)


class DegenerateLeftEndpoint(ValueError):
    """A functional needs log a but a = 0 with a nonzero g-component."""


class NoRoot(RuntimeError):
    """The bracketing bisection found no sign change."""


@dataclass(frozen=True)
class IntervalFamilyParams:
    a: float
    b: float
    alpha: float
    gamma: float
    check: bool = True

    def __post_init__(self):
        if not (0.0 <= self.a < self.b) or not math.isfinite(self.b):
            raise ValueError(f"need 0 <= a < b, got a={self.a}, b={self.b}")
        if self.a == 0.0 and self.beta != 0.0:
            raise DegenerateLeftEndpoint("a = 0 requires beta = 0")
        if self.check and not self.is_nonnegative():
            raise ValueError("family density is negative somewhere on [a, b]")

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha

    @property
    def m(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def c(self) -> float:
        return 0.5 * (self.b - self.a)

    @property
    def g(self) -> float:
        return math.sqrt(self.a * self.b)

    def numerator(self, x):
        """alpha + beta g / x + gamma (m - x); the density is this times f."""
        x = np.asarray(x, dtype=float)
        beta_part = 0.0 if self.beta == 0.0 else self.beta * self.g / x
        return self.alpha + beta_part + self.gamma * (self.m - x)

    def is_nonnegative(self, samples: int = 257) -> bool:
        theta = np.linspace(0.0, np.pi, samples)
        x = self.m + self.c * np.cos(theta)
        if self.a == 0.0:
            x = x[x > 0.0]
        scale = abs(self.alpha) + abs(self.beta) + abs(self.gamma) * self.c
        return bool(np.min(self.numerator(x)) >= -1e-12 * max(scale, 1.0))


def family_density(p: IntervalFamilyParams, x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return p.numerator(x) / (np.pi * np.sqrt((p.b - x) * (x - p.a)))


def family_expectation(p: IntervalFamilyParams) -> float:
    return p.g + p.alpha * (p.m - p.g) - p.gamma * p.c**2 / 2.0


def _require_positive_left(p: IntervalFamilyParams):
    if p.a <= 0.0:
        raise DegenerateLeftEndpoint("log-moment and energy need a > 0 unless beta = 0")


def family_log_moment(p: IntervalFamilyParams) -> float:
    """int log x d(mu)."""
    _require_positive_left(p)
    s = p.a + p.b + 2.0 * p.g
    return (
        p.alpha * math.log(s / 4.0)
        + p.beta * math.log(4.0 * p.a * p.b / s)
        + p.gamma * (p.g - p.m)
    )


def family_energy(p: IntervalFamilyParams) -> float:
    """int int log|x - y| d(mu) d(mu)."""
    if p.beta == 0.0:
        return math.log(p.c / 2.0) - p.gamma**2 * p.c**2 / 2.0
    _require_positive_left(p)
    return (
        math.log(p.c / 2.0)
        - 2.0 * p.beta**2 * math.log((p.m + p.g) / (2.0 * p.g))
        - 2.0 * p.beta * p.gamma * (p.m - p.g)
        - p.gamma**2 * p.c**2 / 2.0
    )


def family_potential(p: IntervalFamilyParams, x) -> float:
    """Potential at x in [a, b]."""
    const = p.alpha * math.log(p.c / 2.0) - p.gamma * p.m
    if p.beta != 0.0:
        const -= p.beta * math.log((p.a + p.b + 2.0 * p.g) / (p.b - p.a))
        return p.gamma * x + p.beta * np.log(x) + const
    return p.gamma * np.asarray(x, dtype=float) + const


def boundary_vanishing_params(a: float, b: float) -> tuple[float, float, float]:
    """(alpha, beta, gamma) making the density vanish at both a and b."""
    m, g = 0.5 * (a + b), math.sqrt(a * b)
    return m / (m - g), -g / (m - g), 1.0 / (m - g)


# Schur -----------------------------------------------------------------------


def solve_schur() -> tuple[float, float, float]:
    """Optimal trace bound with no constraint polynomials: (lambda, a, b)."""
    return SQRT_E, 0.0, 4.0 * SQRT_E


def schur_params() -> IntervalFamilyParams:
    _, a, b = solve_schur()
    return IntervalFamilyParams(a, b, alpha=1.0, gamma=2.0 / b)


def schur_density(x):
    x = np.asarray(x, dtype=float)
    b = 4.0 * SQRT_E
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt((b - x) / (math.e * x)) / (2.0 * np.pi)


# Siegel ----------------------------------------------------------------------


@dataclass(frozen=True)
class SiegelSolution:
    E: float
    g: float
    nu: float
    a: float
    b: float

    @property
    def params(self) -> IntervalFamilyParams:
        alpha, _, gamma = boundary_vanishing_params(self.a, self.b)
        return IntervalFamilyParams(self.a, self.b, alpha=alpha, gamma=gamma)


def _xlogx(t: float) -> float:
    return t * math.log(t) if t > 0.0 else 0.0


def _curve_mass_balance(g: float) -> float:
    """E > 1 with E log E - E = g log g - g."""
    target = _xlogx(g) - g
    return brentq(lambda E: _xlogx(E) - E - target, 1.0, math.e, xtol=1e-16, rtol=4 * np.finfo(float).eps)


def _curve_log_moment(g: float) -> float:
    """E = g + t with t > 1 and t log t = -g log g."""
    target = -_xlogx(g)
    t = brentq(lambda t: _xlogx(t) - target, 1.0, 2.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return g + t


def siegel_curve_gap(g: float) -> float:
    """Difference of the two curves E(g); its zero is the Siegel solution."""
    return _curve_log_moment(g) - _curve_mass_balance(g)


def siegel_residuals(E: float, g: float) -> tuple[float, float]:
    return (
        _xlogx(g) - g - (_xlogx(E) - E),
        _xlogx(g) - (g - E) * math.log(E - g),
    )


def _nu_from_E(E: float) -> float:
    """Invert E = e (1 + 1/nu)^(-nu), which decreases from e to 1 on nu > 0."""
    def h(log_nu):
        nu = math.exp(log_nu)
        return 1.0 - nu * math.log1p(1.0 / nu) - math.log(E)
    return math.exp(brentq(h, -40.0, 40.0, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def siegel_transcendental(nu: float) -> float:
    """(1+nu) log(1 + 1/nu) + log(nu)/(1+nu) - 1."""
    return (1.0 + nu) * math.log1p(1.0 / nu) + math.log(nu) / (1.0 + nu) - 1.0


def solve_siegel(tol: float = 1e-14) -> SiegelSolution:
    lo, hi = 1e-9, 1.0 - 1e-9
    f_lo, f_hi = siegel_curve_gap(lo), siegel_curve_gap(hi)
    if f_lo * f_hi > 0:
        raise NoRoot("curve difference does not change sign on (0, 1)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = siegel_curve_gap(mid)
        if f_mid == 0.0:
            lo = hi = mid
            break
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    g = 0.5 * (lo + hi)
    for _ in range(2):
        h = 1e-7
        slope = (siegel_curve_gap(g + h) - siegel_curve_gap(g - h)) / (2 * h)
        step = siegel_curve_gap(g) / slope
        if abs(step) < 10 * tol:
            g -= step
    E = _curve_mass_balance(g)
    nu = _nu_from_E(E)
    root = 1.0 / math.sqrt(nu + 1.0)
    return SiegelSolution(E=E, g=g, nu=nu, a=E * (1.0 - root) ** 2, b=E * (1.0 + root) ** 2)


def siegel_density(sol: SiegelSolution, x):
    x = np.asarray(x, dtype=float)
    a, b = sol.a, sol.b
    inside = (x > a) & (x < b)
    out = np.zeros_like(x)
    xs = x[inside]
    out[inside] = 2.0 * np.sqrt((b - xs) * (xs - a)) / (np.pi * (a + b - 2.0 * math.sqrt(a * b)) * xs)
    return out


def count_curve_crossings(samples: int = 2001) -> int:
    """Sign changes of the curve difference on a grid in (0, 1)."""
    grid = np.linspace(1e-6, 1.0 - 1e-6, samples)
    vals = np.array([siegel_curve_gap(g) for g in grid])
    return int(np.sum(np.sign(vals[:-1]) != np.sign(vals[1:])))
