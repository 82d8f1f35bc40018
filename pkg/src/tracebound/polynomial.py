"""Real polynomial arithmetic used throughout the package.

Two representations live here. ``RealPolynomial`` stores ascending
monomial coefficients and is used for the (small, integer) constraint
polynomials. ``RootProduct`` stores a scale and a list of real roots and is
used for high-degree numerators, where monomial evaluation would lose all
relative accuracy near the support.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class NonSquarefree(ValueError):
    """A repeated root was detected during root isolation."""


class DuplicateNode(ValueError):
    """Interpolation nodes are not pairwise distinct."""


class PolynomialSyntaxError(ValueError):
    """A polynomial string could not be parsed."""


@dataclass(frozen=True)
class RealPolynomial:
    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        c = [float(v) for v in coeffs]
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        if not c:
            c = [0.0]
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> float:
        return self.coeffs[-1]

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    def __call__(self, x):
        return eval_poly(self, x)

    def derivative(self) -> "RealPolynomial":
        if self.degree == 0:
            return RealPolynomial([0.0])
        return RealPolynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    def __mul__(self, other: "RealPolynomial") -> "RealPolynomial":
        return RealPolynomial(np.convolve(self.coeffs, other.coeffs))

    def __add__(self, other: "RealPolynomial") -> "RealPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n)
        a[: len(self.coeffs)] += self.coeffs
        a[: len(other.coeffs)] += other.coeffs
        return RealPolynomial(a)

    def __neg__(self) -> "RealPolynomial":
        return RealPolynomial([-c for c in self.coeffs])

    def __sub__(self, other: "RealPolynomial") -> "RealPolynomial":
        return self + (-other)

    def scale(self, s: float) -> "RealPolynomial":
        return RealPolynomial([s * c for c in self.coeffs])

    def __str__(self) -> str:
        return format_poly(self)


@dataclass(frozen=True)
class RootProduct:
    """scale * prod(x - r) over the stored real roots."""

    scale: float
    roots: tuple[float, ...]

    def __init__(self, scale: float, roots: Iterable[float] = ()):
        object.__setattr__(self, "scale", float(scale))
        object.__setattr__(self, "roots", tuple(float(r) for r in roots))

    @property
    def degree(self) -> int:
        return len(self.roots)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.scale)
        for r in self.roots:
            out = out * (x - r)
        return out if out.ndim else float(out)

    def to_monomial(self) -> RealPolynomial:
        c = np.array([self.scale])
        for r in self.roots:
            c = np.convolve(c, [-r, 1.0])
        return RealPolynomial(c)


def eval_poly(p: RealPolynomial, x):
    """Horner evaluation; works elementwise on arrays."""
    x = np.asarray(x, dtype=float)
    acc = np.zeros_like(x)
    for c in reversed(p.coeffs):
        acc = acc * x + c
    return acc if acc.ndim else float(acc)


def _sign_changes_roots(p: RealPolynomial, lo: float, hi: float, grid: int) -> list[tuple[float, float]]:
    xs = np.linspace(lo, hi, grid + 1)
    vals = eval_poly(p, xs)
    brackets = []
    for i in range(grid):
        if vals[i] == 0.0:
            brackets.append((xs[i], xs[i]))
        elif vals[i] * vals[i + 1] < 0:
            brackets.append((xs[i], xs[i + 1]))
    if vals[-1] == 0.0:
        brackets.append((xs[-1], xs[-1]))
    return brackets


def _refine_root(p: RealPolynomial, dp: RealPolynomial, lo: float, hi: float) -> float:
    if lo == hi:
        return lo
    flo = eval_poly(p, lo)
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx = eval_poly(p, x)
        if fx == 0.0:
            return x
        if np.sign(fx) == np.sign(flo):
            lo, flo = x, fx
        else:
            hi = x
        d = eval_poly(dp, x)
        step = x - fx / d if d != 0.0 else None
        if step is not None and lo < step < hi:
            x_new = step
        else:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < 1e-16 * max(1.0, abs(x)) or hi - lo < 1e-15 * max(1.0, abs(x)):
            return x_new
        x = x_new
    return x


def real_roots(p: RealPolynomial, interval: Sequence[float] = (0.0, 18.0)) -> list[float]:
    """All real roots of ``p`` in ``[lo, hi]``, ascending.

    Roots are isolated by the roots of the derivative (recursively), which
    splits the interval into monotone pieces; each piece holds at most one
    root and is refined by safeguarded Newton.
    """
    if p.is_zero():
        raise ValueError("zero polynomial has no isolated roots")
    lo, hi = float(interval[0]), float(interval[1])
    roots = _roots_monotone_split(p, lo, hi)
    scale = 1.0 + max(abs(c) for c in p.coeffs)
    dp = p.derivative()
    dscale = 1.0 + max(abs(c) for c in dp.coeffs)
    for r in roots:
        if abs(eval_poly(dp, r)) < 1e-9 * dscale and abs(eval_poly(p, r)) < 1e-9 * scale:
            raise NonSquarefree(f"repeated root near {r:.12g}")
    return roots


def _roots_monotone_split(p: RealPolynomial, lo: float, hi: float) -> list[float]:
    if p.degree == 0:
        return []
    if p.degree == 1:
        r = -p.coeffs[0] / p.coeffs[1]
        return [r] if lo <= r <= hi else []
    dp = p.derivative()
    crit = [c for c in _roots_monotone_split(dp, lo, hi) if lo < c < hi]
    cuts = [lo] + crit + [hi]
    out: list[float] = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        fa, fb = eval_poly(p, a), eval_poly(p, b)
        if fa == 0.0:
            cand = a
        elif fb == 0.0:
            cand = b
        elif fa * fb < 0:
            cand = _refine_root(p, dp, a, b)
        else:
            continue
        if not out or abs(cand - out[-1]) > 1e-12 * max(1.0, abs(cand)):
            out.append(cand)
    # A double root sits at a critical point where p touches zero.
    scale = 1.0 + max(abs(c) for c in p.coeffs)
    for c in crit:
        if abs(eval_poly(p, c)) < 1e-12 * scale and all(abs(c - r) > 1e-9 for r in out):
            out.append(c)
    return sorted(out)


def sylvester_matrix(p: RealPolynomial, q: RealPolynomial) -> np.ndarray:
    m, n = p.degree, q.degree
    size = m + n
    S = np.zeros((size, size))
    pc = list(reversed(p.coeffs))
    qc = list(reversed(q.coeffs))
    for i in range(n):
        S[i, i : i + m + 1] = pc
    for i in range(m):
        S[n + i, i : i + n + 1] = qc
    return S


def resultant(p: RealPolynomial, q: RealPolynomial) -> float:
    if p.is_zero() or q.is_zero():
        return 0.0
    if p.degree == 0:
        return p.coeffs[0] ** q.degree
    if q.degree == 0:
        return q.coeffs[0] ** p.degree
    return float(np.linalg.det(sylvester_matrix(p, q)))


def discriminant(p: RealPolynomial) -> float:
    d = p.degree
    if d < 1:
        raise ValueError("discriminant needs degree >= 1")
    if d == 1:
        return 1.0
    sign = -1.0 if (d * (d - 1) // 2) % 2 else 1.0
    return sign * resultant(p, p.derivative()) / p.leading


def lagrange_interpolate(points: Sequence[tuple[float, float]]) -> RealPolynomial:
    xs = [float(x) for x, _ in points]
    if len(set(xs)) != len(xs):
        raise DuplicateNode("interpolation nodes must be distinct")
    total = RealPolynomial([0.0])
    for i, (xi, yi) in enumerate(points):
        basis = RealPolynomial([1.0])
        denom = 1.0
        for j, xj in enumerate(xs):
            if j != i:
                basis = basis * RealPolynomial([-xj, 1.0])
                denom *= xi - xj
        total = total + basis.scale(yi / denom)
    return total


_TERM = re.compile(r"([+-]?)(\d*)(x(?:\^(\d+))?)?")


def parse_poly(text: str) -> RealPolynomial:
    """Parse integer polynomials such as ``x^2-3x+1`` or ``x^4-7x^3+13x^2-7x+1``."""
    if re.search(r"[\dx]\s+[\dx]", text):
        raise PolynomialSyntaxError(f"missing operator in {text!r}")
    s = re.sub(r"\s+", "", text).replace("*", "")
    if not s:
        raise PolynomialSyntaxError("empty polynomial")
    coeffs: dict[int, int] = {}
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if m is None or m.end() == pos:
            raise PolynomialSyntaxError(f"cannot parse {text!r} at position {pos}")
        sign, digits, xpart, power = m.groups()
        if not digits and not xpart:
            raise PolynomialSyntaxError(f"dangling sign in {text!r}")
        if pos > 0 and not sign:
            raise PolynomialSyntaxError(f"missing operator in {text!r}")
        k = int(digits) if digits else 1
        if sign == "-":
            k = -k
        deg = (int(power) if power else 1) if xpart else 0
        coeffs[deg] = coeffs.get(deg, 0) + k
        pos = m.end()
    top = max(coeffs)
    return RealPolynomial([coeffs.get(i, 0) for i in range(top + 1)])


def format_poly(p: RealPolynomial) -> str:
    """Inverse of :func:`parse_poly` for integer coefficients."""
    parts = []
    for deg in range(p.degree, -1, -1):
        c = p.coeffs[deg]
        if c == 0:
            continue
        ci = int(c) if float(c).is_integer() else c
        mag = abs(ci)
        if deg == 0:
            body = f"{mag}"
        else:
            body = ("" if mag == 1 else f"{mag}") + ("x" if deg == 1 else f"x^{deg}")
        sign = "-" if c < 0 else "+"
        parts.append((sign, body))
    if not parts:
        return "0"
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += sign + body
    return out


def product(polys: Iterable[RealPolynomial]) -> RealPolynomial:
    out = RealPolynomial([1.0])
    for p in polys:
        out = out * p
    return out
