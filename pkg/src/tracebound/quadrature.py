"""Integration with inverse-square-root endpoint singularities.

On an interval [a, b] with midpoint m and half-width c, the substitution
y = m + c cos(theta) turns dy / sqrt((b - y)(y - a)) into d(theta), so any
integrand of the form g(y) / sqrt((b - y)(y - a)) becomes smooth in theta.
The midpoint rule in theta is then spectrally accurate.

The same samples give the cosine coefficients of g(theta), and against
those coefficients the logarithmic kernel log|x - y|, the Cauchy kernel
1/(x - y) and the kernel 1/(x - y)^2 integrate in closed form. This is what
makes potentials reliable right up to (and on) the support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.fft import dct

DOMAIN = (0.0, 18.0)


class NoConvergence(RuntimeError):
    """Quadrature failed to meet its tolerance within the node budget."""


class InvalidSupport(ValueError):
    """Endpoints do not describe a union of disjoint closed intervals."""


@dataclass(frozen=True)
class QuadratureConfig:
    nodes_per_interval: int = 256
    refinement_tol: float = 1e-12
    max_nodes: int = 2**20

    def __post_init__(self):
        n = self.nodes_per_interval
        if n < 16 or n & (n - 1):
            raise ValueError("nodes_per_interval must be a power of two >= 16")
        if self.refinement_tol <= 0:
            raise ValueError("refinement_tol must be positive")


@dataclass(frozen=True)
class SupportSet:
    """Sorted endpoints a_0 < a_1 < ... < a_{2l+1}; intervals are [a_{2i}, a_{2i+1}]."""

    endpoints: tuple[float, ...]
    domain: tuple[float, float] | None = field(default=DOMAIN, compare=False)

    def __init__(self, endpoints: Sequence[float], domain: tuple[float, float] | None = DOMAIN):
        pts = tuple(float(a) for a in endpoints)
        object.__setattr__(self, "endpoints", pts)
        object.__setattr__(self, "domain", domain)
        if len(pts) < 2 or len(pts) % 2:
            raise InvalidSupport("need an even, nonzero number of endpoints")
        if any(not math.isfinite(a) for a in pts):
            raise InvalidSupport("endpoints must be finite")
        if any(b <= a for a, b in zip(pts[:-1], pts[1:])):
            raise InvalidSupport("endpoints must be strictly increasing")
        if domain is not None and (pts[0] < domain[0] or pts[-1] > domain[1]):
            raise InvalidSupport(f"support must lie inside [{domain[0]}, {domain[1]}]")

    @property
    def n_intervals(self) -> int:
        return len(self.endpoints) // 2

    @property
    def n_gaps(self) -> int:
        return self.n_intervals - 1

    def interval(self, k: int) -> tuple[float, float]:
        return self.endpoints[2 * k], self.endpoints[2 * k + 1]

    def gap(self, i: int) -> tuple[float, float]:
        return self.endpoints[2 * i + 1], self.endpoints[2 * i + 2]

    def intervals(self) -> list[tuple[float, float]]:
        return [self.interval(k) for k in range(self.n_intervals)]

    def gaps(self) -> list[tuple[float, float]]:
        return [self.gap(i) for i in range(self.n_gaps)]

    def locate(self, x: float) -> int | None:
        """Index of the interval containing x, else None."""
        for k, (a, b) in enumerate(self.intervals()):
            if a <= x <= b:
                return k
        return None

    def contains(self, x: float) -> bool:
        return self.locate(x) is not None

    def branch_sign(self, k: int) -> int:
        """Sign of the analytic branch of sqrt(H) on interval k, (-1)^(l-k)."""
        return -1 if (self.n_intervals - 1 - k) % 2 else 1

    def H(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x)
        for a in self.endpoints:
            out = out * (x - a)
        return out

    def sqrt_abs_H_excluding(self, x, skip: tuple[int, int]):
        """prod over j not in skip of sqrt|x - a_j|, in product form."""
        x = np.asarray(x, dtype=float)
        pts = np.array([a for j, a in enumerate(self.endpoints) if j not in skip])
        if pts.size == 0:
            return np.ones_like(x)
        return np.prod(np.sqrt(np.abs(x[..., None] - pts)), axis=-1)

    def sqrt_rest(self, x, k: int):
        return self.sqrt_abs_H_excluding(x, (2 * k, 2 * k + 1))

    def sqrt_rest_gap(self, x, i: int):
        return self.sqrt_abs_H_excluding(x, (2 * i + 1, 2 * i + 2))


@lru_cache(maxsize=64)
def theta_nodes(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) * (np.pi / n)


def chebyshev_points(a: float, b: float, n: int) -> np.ndarray:
    """Images of the midpoint theta-nodes on [a, b]."""
    return 0.5 * (a + b) + 0.5 * (b - a) * np.cos(theta_nodes(n))


def cosine_coefficients(values: np.ndarray) -> np.ndarray:
    """Coefficients g_k with g(theta) = sum_k g_k cos(k theta), from midpoint samples.

    Works along the last axis.
    """
    n = values.shape[-1]
    coef = dct(values, type=2, axis=-1) / n
    coef[..., 0] *= 0.5
    return coef


def _theta_sum(g: Callable, a: float, b: float, n: int) -> float:
    y = chebyshev_points(a, b, n)
    return float(np.sum(g(y)) * (np.pi / n))


def integrate_singular(g: Callable, interval: Sequence[float], cfg: QuadratureConfig | None = None) -> float:
    """int_a^b g(x) / sqrt((b - x)(x - a)) dx by the midpoint rule in theta, doubling nodes."""
    cfg = cfg or QuadratureConfig()
    a, b = float(interval[0]), float(interval[1])
    n = cfg.nodes_per_interval
    prev = _theta_sum(g, a, b, n)
    while True:
        n *= 2
        if n > cfg.max_nodes:
            raise NoConvergence(f"no convergence on [{a}, {b}] within {cfg.max_nodes} nodes")
        cur = _theta_sum(g, a, b, n)
        if abs(cur - prev) < cfg.refinement_tol * max(1.0, abs(cur)):
            return cur
        prev = cur


def integrate_singular_union(
    g: Callable,
    support: SupportSet,
    H=None,
    cfg: QuadratureConfig | None = None,
) -> float:
    """Sum over intervals of int g(x) / sqrt|H(x)| dx.

    H defaults to prod(x - a_j). If given, only its leading coefficient is
    used; the remaining factor is always evaluated in product-of-roots form.
    """
    lead = 1.0 if H is None else abs(float(H.leading))
    total = 0.0
    for k, (a, b) in enumerate(support.intervals()):
        total += integrate_singular(lambda y, k=k: g(y) / support.sqrt_rest(y, k), (a, b), cfg)
    return total / math.sqrt(lead)


def _simpson(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive_simpson(f, a, b, tol, max_depth=60):
    fa, fb = f(a), f(b)
    m, fm, whole = _simpson(f, a, fa, b, fb)
    stack = [(a, fa, b, fb, m, fm, whole, tol, 0)]
    total = 0.0
    while stack:
        a, fa, b, fb, m, fm, whole, tol, depth = stack.pop()
        lm, flm, left = _simpson(f, a, fa, m, fm)
        rm, frm, right = _simpson(f, m, fm, b, fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol or b - a < 1e-15 * max(1.0, abs(a)):
            total += left + right + delta / 15.0
        elif depth >= max_depth:
            raise NoConvergence(f"adaptive Simpson exceeded depth {max_depth} near [{a}, {b}]")
        else:
            stack.append((a, fa, m, fm, lm, flm, left, tol / 2.0, depth + 1))
            stack.append((m, fm, b, fb, rm, frm, right, tol / 2.0, depth + 1))
    return total


def integrate_smooth(g: Callable, interval: Sequence[float], tol: float = 1e-10) -> float:
    """Adaptive Simpson on [a, b].

    An endpoint where g is not finite is treated as an integrable
    singularity: that half of the interval is remapped with x = end + h t^2,
    which flattens logarithmic and inverse-square-root behaviour.
    """
    a, b = float(interval[0]), float(interval[1])
    if a == b:
        return 0.0

    def finite(x):
        try:
            with np.errstate(all="ignore"):
                v = float(g(x))
        except (ValueError, ZeroDivisionError, OverflowError):
            return False
        return math.isfinite(v)

    left_bad, right_bad = not finite(a), not finite(b)
    if not (left_bad or right_bad):
        return _adaptive_simpson(lambda x: float(g(x)), a, b, tol)
    m = 0.5 * (a + b)
    total = 0.0
    for end, bad in ((a, left_bad), (b, right_bad)):
        h = m - end
        if bad:
            # x = end + h t^2 maps t in [0, 1] onto the half touching `end`
            def remapped(t, end=end, h=h):
                return 0.0 if t == 0.0 else float(g(end + h * t * t)) * 2.0 * abs(h) * t
            total += _adaptive_simpson(remapped, 0.0, 1.0, tol / 2.0)
        else:
            total += _adaptive_simpson(lambda x: float(g(x)), min(end, m), max(end, m), tol / 2.0)
    return total


# Closed-form kernel moments -------------------------------------------------
#
# For y = m + c cos(theta) and g(theta) = sum_k g_k cos(k theta), each
# function below returns a matrix M of shape (len(x), n) such that
#     int_0^pi g(theta) K(x, y(theta)) d(theta) = M @ g.


def _outside_params(t):
    at = np.abs(t)
    s = np.sqrt((at - 1.0) * (at + 1.0))
    rho = 1.0 / (at + s)
    return at, s, rho


def log_kernel_moments(x, m: float, c: float, n: int) -> np.ndarray:
    """Moments of log|x - y| against cos(k theta), valid for every real x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = (x - m) / c
    k = np.arange(n)
    M = np.empty((x.size, n))
    inside = np.abs(t) <= 1.0
    if inside.any():
        phi = np.arccos(np.clip(t[inside], -1.0, 1.0))
        block = -np.pi * np.cos(np.outer(phi, k[1:])) / k[1:]
        M[inside, 1:] = block
        M[inside, 0] = np.pi * (math.log(c) - math.log(2.0))
    out = ~inside
    if out.any():
        at, s, rho = _outside_params(t[out])
        sgn = np.sign(t[out])
        powers = (sgn * rho)[:, None] ** k[None, 1:]
        M[out, 1:] = -np.pi * powers / k[1:]
        M[out, 0] = np.pi * (math.log(c) + np.log(0.5 * (at + s)))
    return M


def cauchy_kernel_moments(x, m: float, c: float, n: int) -> np.ndarray:
    """Moments of 1/(x - y); x must lie outside [m - c, m + c]."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = (x - m) / c
    if np.any(np.abs(t) <= 1.0):
        raise ValueError("Cauchy moments require x off the interval")
    at, s, rho = _outside_params(t)
    sgn = np.sign(t)
    k = np.arange(n)
    powers = (sgn * rho)[:, None] ** k[None, :]
    return (sgn * np.pi / (c * s))[:, None] * powers


def inverse_square_moments(x, m: float, c: float, n: int) -> np.ndarray:
    """Moments of 1/(x - y)^2; x must lie outside [m - c, m + c]."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = (x - m) / c
    if np.any(np.abs(t) <= 1.0):
        raise ValueError("inverse-square moments require x off the interval")
    at, s, rho = _outside_params(t)
    sgn = np.sign(t)
    k = np.arange(n)
    powers = (sgn * rho)[:, None] ** k[None, :]
    shape = (at / s**3)[:, None] + k[None, :] / (s**2)[:, None]
    return np.pi * powers * shape / c**2
