"""Measures on a finite union of intervals with explicit potentials.

Every measure here has a density of the form w_k(y) / sqrt((b_k - y)(y - a_k))
on interval k, where the weighted density w_k is smooth up to the endpoints.
A measure is stored as the cosine coefficients of w_k(m_k + c_k cos theta)
for each interval, plus (optionally) a callable for w_k itself so that
endpoint limits can be read off exactly.

Sign convention for signed numerators: on interval k the analytic branch of
sqrt(H) equals (-1)^(l-k) sqrt|H| times i, so a numerator N gives the density
N(y) / (pi * (-1)^(l-k) * sqrt|H(y)|). With this convention a monic numerator
with one root per gap is positive on every interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.fft import dct
from scipy.optimize import brentq

from .polynomial import RealPolynomial, RootProduct, format_poly, real_roots
from .quadrature import (
    NoConvergence,
    QuadratureConfig,
    SupportSet,
    chebyshev_points,
    cosine_coefficients,
    inverse_square_moments,
    log_kernel_moments,
)


class SingularSystem(RuntimeError):
    """The equilibrium (or correction) linear system is degenerate."""


class AlphaOnSupport(ValueError):
    """A pole of a log-potential measure lies on the support."""


class RootOnSupport(ValueError):
    """A root of a constraint polynomial lies on the support."""


class GapRootMismatch(ValueError):
    """The roots of the constraint polynomials do not sit one per gap."""


class NegativeDensity(ValueError):
    """The assembled candidate density is negative somewhere on the support."""


Weighted = Callable[[np.ndarray, int], np.ndarray]


def cosine_values(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Evaluate sum_k g_k cos(k theta_j) at the n midpoint nodes (n >= len(coeffs))."""
    padded = np.zeros(coeffs.shape[:-1] + (n,))
    m = min(n, coeffs.shape[-1])
    padded[..., :m] = coeffs[..., :m]
    padded[..., 1:] *= 0.5
    return dct(padded, type=3, axis=-1)


def _resolve(sampler: Callable[[np.ndarray], np.ndarray], a: float, b: float, cfg: QuadratureConfig):
    """Sample on [a, b] at midpoint nodes, doubling until the cosine tail is negligible."""
    n = cfg.nodes_per_interval
    while True:
        y = chebyshev_points(a, b, n)
        vals = np.asarray(sampler(y), dtype=float)
        coef = cosine_coefficients(vals)
        scale = float(np.max(np.abs(coef))) if coef.size else 0.0
        tail = float(np.max(np.abs(coef[..., n // 2 :]))) if coef.size else 0.0
        if not np.all(np.isfinite(coef)):
            raise NoConvergence(f"non-finite samples on [{a}, {b}]")
        if tail <= cfg.refinement_tol * 0.1 * max(scale, 1e-300):
            return coef
        n *= 2
        if n > cfg.max_nodes:
            raise NoConvergence(f"weighted density on [{a}, {b}] not resolved by {cfg.max_nodes} nodes")


@dataclass
class SqrtMeasure:
    """Measure on a SupportSet stored through its weighted density per interval."""

    support: SupportSet
    coeffs: list[np.ndarray]
    weighted: Weighted | None = None
    numerator: object = None
    denominator: object = None
    offset: float | None = None
    label: str = ""

    @classmethod
    def from_weighted(cls, support: SupportSet, weighted: Weighted, cfg: QuadratureConfig | None = None, **kw):
        cfg = cfg or QuadratureConfig()
        coeffs = [_resolve(lambda y, k=k: weighted(y, k), a, b, cfg) for k, (a, b) in enumerate(support.intervals())]
        return cls(support=support, coeffs=coeffs, weighted=weighted, **kw)

    # arithmetic -----------------------------------------------------------
    def scaled(self, s: float) -> "SqrtMeasure":
        w = self.weighted
        return SqrtMeasure(
            support=self.support,
            coeffs=[s * g for g in self.coeffs],
            weighted=None if w is None else (lambda y, k: s * w(y, k)),
            offset=None,
            label=self.label,
        )

    # integrals ----------------------------------------------------------------
    def mass(self) -> float:
        return float(sum(np.pi * g[0] for g in self.coeffs))

    def expectation(self) -> float:
        total = 0.0
        for (a, b), g in zip(self.support.intervals(), self.coeffs):
            m, c = 0.5 * (a + b), 0.5 * (b - a)
            g1 = g[1] if g.size > 1 else 0.0
            total += np.pi * (m * g[0] + 0.5 * c * g1)
        return float(total)

    def node_values(self, k: int, factor: int = 1):
        g = self.coeffs[k]
        n = g.size * factor
        a, b = self.support.interval(k)
        return chebyshev_points(a, b, n), cosine_values(g, n), n

    def integrate(self, fun: Callable[[np.ndarray], np.ndarray], tol: float = 1e-13) -> float:
        """int fun d(mu) for fun smooth on the support; doubles nodes until stable."""
        total = 0.0
        for k in range(self.support.n_intervals):
            prev = None
            factor = 1
            while True:
                y, v, n = self.node_values(k, factor)
                cur = float(np.sum(fun(y) * v) * np.pi / n)
                if prev is not None and abs(cur - prev) <= tol * max(1.0, abs(cur)):
                    break
                prev = cur
                factor *= 2
                if n * 2 > 2**20:
                    raise NoConvergence("integrand not resolved on the support")
            total += cur
        return total

    def potential(self, x) -> np.ndarray | float:
        """U(x) = int log|x - y| d(mu)(y), for any real x."""
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.size)
        for (a, b), g in zip(self.support.intervals(), self.coeffs):
            out += log_kernel_moments(x, 0.5 * (a + b), 0.5 * (b - a), g.size) @ g
        return float(out[0]) if scalar else out

    def inverse_square(self, x) -> np.ndarray | float:
        """int d(mu)(y) / (x - y)^2 for x off the support."""
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.size)
        for (a, b), g in zip(self.support.intervals(), self.coeffs):
            out += inverse_square_moments(x, 0.5 * (a + b), 0.5 * (b - a), g.size) @ g
        return float(out[0]) if scalar else out

    def weighted_at(self, x: float, k: int) -> float:
        """Weighted density on interval k; exact callable if known, else the cosine series."""
        if self.weighted is not None:
            return float(np.asarray(self.weighted(np.array([x]), k))[0])
        a, b = self.support.interval(k)
        t = np.clip((x - 0.5 * (a + b)) / (0.5 * (b - a)), -1.0, 1.0)
        theta = math.acos(t)
        g = self.coeffs[k]
        return float(np.sum(g * np.cos(np.arange(g.size) * theta)))

    def boundary_weights(self) -> np.ndarray:
        """Weighted density at every endpoint a_i (limit from inside the support)."""
        out = []
        for i, a in enumerate(self.support.endpoints):
            out.append(self.weighted_at(a, i // 2))
        return np.array(out)

    def density(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.size)
        for k, (a, b) in enumerate(self.support.intervals()):
            sel = (x > a) & (x < b)
            if sel.any():
                xs = x[sel]
                if self.weighted is not None:
                    w = np.asarray(self.weighted(xs, k), dtype=float)
                else:
                    w = np.array([self.weighted_at(v, k) for v in xs])
                out[sel] = w / np.sqrt((b - xs) * (xs - a))
        return out


def combine(terms: Sequence[tuple[float, SqrtMeasure]], label: str = "") -> SqrtMeasure:
    """Linear combination sum c_i mu_i of measures on a common support."""
    support = terms[0][1].support
    nint = support.n_intervals
    coeffs = []
    for k in range(nint):
        n = max(mu.coeffs[k].size for _, mu in terms)
        acc = np.zeros(n)
        for c, mu in terms:
            g = mu.coeffs[k]
            acc[: g.size] += c * g
        coeffs.append(acc)
    if all(mu.weighted is not None for _, mu in terms):
        parts = [(c, mu.weighted) for c, mu in terms]

        def weighted(y, k):
            return sum(c * w(y, k) for c, w in parts)
    else:
        weighted = None
    return SqrtMeasure(support=support, coeffs=coeffs, weighted=weighted, label=label)


# Equilibrium measure ----------------------------------------------------------


def _anchor_basis(anchors: Sequence[float], y: np.ndarray) -> np.ndarray:
    """Rows q_j(y) = prod_{i != j}(y - g_i) for each anchor, then the full product."""
    y = np.asarray(y, dtype=float)
    factors = np.array([y - g for g in anchors]).reshape(len(anchors), -1)
    ones = np.ones((1, factors.shape[1]))
    before = np.cumprod(np.vstack([ones, factors[:-1]]), axis=0)
    after = np.cumprod(np.vstack([ones, factors[:0:-1]]), axis=0)[::-1]
    rows = before * after
    return np.vstack([rows, rows[-1:] * factors[-1:]])


def gap_moment_matrix(support: SupportSet, anchors: Sequence[float], cfg: QuadratureConfig | None = None) -> np.ndarray:
    """G[i, j] = int over gap i of q_j(x) / sqrt|H(x)| dx for the anchored product basis."""
    cfg = cfg or QuadratureConfig()
    rows = []
    for i, (a, b) in enumerate(support.gaps()):
        coef = _resolve(lambda y, i=i: _anchor_basis(anchors, y) / support.sqrt_rest_gap(y, i), a, b, cfg)
        rows.append(np.pi * coef[:, 0])
    return np.array(rows)


def gap_residuals(support: SupportSet, p: Callable, cfg: QuadratureConfig | None = None) -> np.ndarray:
    """Per gap, int p/sqrt|H| over pi * max|p/sqrt(rest of H)|; zero for the equilibrium numerator.

    The scale is a bound on the integral itself, so the ratio is at most 1
    and does not depend on how the support is scaled.
    """
    cfg = cfg or QuadratureConfig()
    out = []
    for i, (a, b) in enumerate(support.gaps()):
        coef = _resolve(lambda y, i=i: p(y) / support.sqrt_rest_gap(y, i), a, b, cfg)
        y = chebyshev_points(a, b, 4 * coef.size)
        bound = float(np.max(np.abs(p(y) / support.sqrt_rest_gap(y, i))))
        out.append(coef[0] / bound)
    return np.array(out)


def equilibrium_numerator(support: SupportSet, cfg: QuadratureConfig | None = None, max_passes: int = 1) -> RootProduct:
    """Monic p_eq of degree l with a vanishing integral of p/sqrt|H| over every gap.

    p is expanded in a product basis anchored at one point per gap, which
    keeps the gap system well conditioned even when interval lengths differ
    by orders of magnitude. Extra passes re-anchor at the roots just found;
    one pass is normally accurate to rounding already.
    """
    l = support.n_gaps
    if l == 0:
        return RootProduct(1.0, ())
    anchors = np.array([0.5 * (a + b) for a, b in support.gaps()])
    for _ in range(max_passes):
        G = gap_moment_matrix(support, anchors, cfg)
        A, rhs = G[:, :l], -G[:, l]
        row = np.max(np.abs(A), axis=1)
        col = np.max(np.abs(A / row[:, None]), axis=0)
        As = A / row[:, None] / col[None, :]
        cond = np.linalg.cond(As)
        if not np.isfinite(cond) or cond > 1e13:
            raise SingularSystem(f"equilibrium system is ill-conditioned (cond={cond:.3g})")
        u = np.linalg.solve(As, rhs / row) / col

        roots = []
        for j, (a, b) in enumerate(support.gaps()):
            # p / prod_{i != j}(x - g_i): same root in gap j, no sign flips there
            def reduced(x, j=j, u=u, anchors=anchors):
                shifted = x - anchors[j]
                total = shifted + u[j]
                for i in range(l):
                    if i != j:
                        total += shifted * u[i] / (x - anchors[i])
                return total
            fa, fb = reduced(a), reduced(b)
            if not fa * fb < 0:
                raise SingularSystem(f"no sign change of the equilibrium numerator on gap ({a}, {b})")
            roots.append(brentq(reduced, a, b, xtol=1e-15, rtol=1e-15, maxiter=200))
        roots = np.array(roots)
        moved = np.max(np.abs(roots - anchors) / np.array([b - a for a, b in support.gaps()]))
        anchors = roots
        if moved < 1e-14:
            break
    return RootProduct(1.0, anchors)


def equilibrium_measure(support: SupportSet, cfg: QuadratureConfig | None = None) -> SqrtMeasure:
    p = equilibrium_numerator(support, cfg)

    def weighted(y, k):
        return np.abs(p(y)) / (np.pi * support.sqrt_rest(y, k))

    mu = SqrtMeasure.from_weighted(support, weighted, cfg, numerator=p, label="eq")
    mass = mu.mass()
    if not abs(mass - 1.0) < 1e-6:
        raise SingularSystem(f"equilibrium mass {mass} far from 1")
    mu = SqrtMeasure(
        support=support,
        coeffs=[g / mass for g in mu.coeffs],
        weighted=lambda y, k: weighted(y, k) / mass,
        numerator=RootProduct(1.0 / mass, p.roots),
        label="eq",
    )
    mu.offset = capacity_constant(support, mu)
    return mu


def reference_point(support: SupportSet) -> float:
    a, b = support.interval(0)
    return 0.5 * (a + b)


def capacity_constant(support: SupportSet, mu_eq: SqrtMeasure | None = None, cfg: QuadratureConfig | None = None) -> float:
    """Value of the (constant) equilibrium potential on the support: log of the capacity."""
    if mu_eq is None:
        mu_eq = equilibrium_measure(support, cfg)
    return mu_eq.potential(reference_point(support))


# Log-potential measures -------------------------------------------------------


def _sqrt_abs_H(support: SupportSet, x: float) -> float:
    return float(np.prod([math.sqrt(abs(x - a)) for a in support.endpoints]))


def image_support(support: SupportSet, alpha: float) -> SupportSet:
    """Image of the support under z -> 1/(z - alpha)."""
    pts = sorted(1.0 / (a - alpha) for a in support.endpoints)
    return SupportSet(pts, domain=None)


def log_potential_measure(
    support: SupportSet, alpha: float, cfg: QuadratureConfig | None = None
) -> tuple[SqrtMeasure, float]:
    """Probability measure nu with U_nu(x) = log|x - alpha| + C on the support.

    Built as the pull-back of the equilibrium measure of the image support
    under z -> 1/(z - alpha).
    """
    if support.contains(alpha):
        raise AlphaOnSupport(f"alpha={alpha} lies on the support")
    img = image_support(support, alpha)
    s = equilibrium_numerator(img, cfg).roots
    h_alpha = _sqrt_abs_H(support, alpha)

    def weighted(y, k):
        u = y - alpha
        num = np.ones_like(u)
        for si in s:
            num = num * (1.0 - si * u)
        return h_alpha * np.abs(num) / (np.pi * np.abs(u) * support.sqrt_rest(y, k))

    mu = SqrtMeasure.from_weighted(support, weighted, cfg, label=f"nu[{alpha:.6g}]")
    mass = mu.mass()
    if not abs(mass - 1.0) < 1e-6:
        raise SingularSystem(f"pushed-forward measure has mass {mass}")
    mu = SqrtMeasure(
        support=support,
        coeffs=[g / mass for g in mu.coeffs],
        weighted=lambda y, k: weighted(y, k) / mass,
        numerator=RootProduct(h_alpha / mass * float(np.prod([-si for si in s])) if s else h_alpha / mass,
                              [alpha + 1.0 / si for si in s if si != 0.0]),
        denominator=RealPolynomial([-alpha, 1.0]),
        label=mu.label,
    )
    x0 = reference_point(support)
    C = mu.potential(x0) - math.log(abs(x0 - alpha))
    mu.offset = C
    return mu, C


def log_potential_offset_via_image(support: SupportSet, alpha: float, cfg: QuadratureConfig | None = None) -> float:
    """Second route to the offset C: log-capacity of the image minus its potential at 0."""
    img = image_support(support, alpha)
    mu_img = equilibrium_measure(img, cfg)
    return mu_img.offset - mu_img.potential(0.0)


def polynomial_roots(Q: RealPolynomial) -> list[float]:
    bound = 1.0 + max(abs(c / Q.leading) for c in Q.coeffs[:-1]) if Q.degree > 0 else 1.0
    roots = real_roots(Q, (-bound, bound))
    if len(roots) != Q.degree:
        raise ValueError(f"{format_poly(Q)} does not have {Q.degree} real roots")
    return roots


def measure_for_polynomial(
    support: SupportSet, Q: RealPolynomial, cfg: QuadratureConfig | None = None
) -> tuple[SqrtMeasure, float]:
    """Probability measure with potential log|Q(x)|/deg Q + C_Q on the support."""
    roots = polynomial_roots(Q)
    for r in roots:
        if support.contains(r):
            raise RootOnSupport(f"root {r:.12g} of {format_poly(Q)} lies on the support")
    parts = [log_potential_measure(support, r, cfg)[0] for r in roots]
    d = Q.degree
    mu = combine([(1.0 / d, nu) for nu in parts], label=f"muQ[{format_poly(Q)}]")
    x0 = reference_point(support)
    C = mu.potential(x0) - math.log(abs(Q(x0))) / d
    mu.offset = C
    mu.denominator = Q
    return mu, C


# Linear-potential measure -----------------------------------------------------


def linear_potential_measure(
    support: SupportSet,
    mu_eq: SqrtMeasure | None = None,
    cfg: QuadratureConfig | None = None,
    zero_mass: bool = True,
) -> SqrtMeasure:
    """Signed measure with potential x + K on the whole support (K in ``.offset``).

    Start from -x d(mu_eq), whose potential is x plus a per-interval constant,
    then add a zero-mass measure with locally constant potential (numerator of
    degree < l) that equalises those constants. With ``zero_mass`` a multiple
    of mu_eq is added so that the total mass is zero; otherwise the mass is
    -int x d(mu_eq).
    """
    cfg = cfg or QuadratureConfig()
    if mu_eq is None:
        mu_eq = equilibrium_measure(support, cfg)
    weq = mu_eq.weighted
    base = SqrtMeasure(
        support=support,
        coeffs=[],
        weighted=lambda y, k: -y * weq(y, k),
    )
    base = SqrtMeasure.from_weighted(support, base.weighted, cfg)
    l = support.n_gaps
    refs = np.array([0.5 * (a + b) for a, b in support.intervals()])
    terms = [(1.0, base)]
    if l > 0:
        anchors = mu_eq.numerator.roots
        basis = []
        for j in range(l):
            def wj(y, k, j=j):
                q = _anchor_basis(anchors, y)[j]
                return support.branch_sign(k) * q / (np.pi * support.sqrt_rest(y, k))
            basis.append(SqrtMeasure.from_weighted(support, wj, cfg))
        lin_consts = base.potential(refs) - refs
        B = np.column_stack([mu.potential(refs) for mu in basis])
        A = B[1:] - B[:-1]
        rhs = -(lin_consts[1:] - lin_consts[:-1])
        col = np.max(np.abs(A), axis=0)
        cond = np.linalg.cond(A / col)
        if not np.isfinite(cond) or cond > 1e13:
            raise SingularSystem(f"linear-potential correction is ill-conditioned (cond={cond:.3g})")
        x = np.linalg.solve(A / col, rhs) / col
        terms += [(float(xj), mu) for xj, mu in zip(x, basis)]
    mu = combine(terms, label="lin")
    if zero_mass:
        mu = combine([(1.0, mu), (-mu.mass(), mu_eq)], label="lin")
    x0 = refs[0]
    mu.offset = mu.potential(x0) - x0
    return mu


# Candidate optimal measure ------------------------------------------------------


@dataclass
class MeasureBundle:
    support: SupportSet
    polys: list[RealPolynomial]
    mu_eq: SqrtMeasure
    mu_lin: SqrtMeasure
    mu_Q: dict[str, SqrtMeasure]
    X_eq: float
    X_lin: float
    X_Q: dict[str, float]
    c: float
    C_Q: dict[str, float]
    K: float
    log_cap: float
    combined: SqrtMeasure
    target: SqrtMeasure | None = None
    roots: dict[str, list[float]] = field(default_factory=dict)

    @property
    def keys(self) -> list[str]:
        return [format_poly(Q) for Q in self.polys]

    def degree(self, key: str) -> int:
        return self.polys[self.keys.index(key)].degree

    def potential_on_support(self, x) -> np.ndarray:
        """Closed-form potential of the combined measure, valid for x on the support."""
        x = np.asarray(x, dtype=float)
        out = self.X_eq * self.log_cap + self.X_lin * (x + self.K)
        for Q, key in zip(self.polys, self.keys):
            d = Q.degree
            out = out + self.X_Q[key] * (np.log(np.abs(Q(x))) / d + self.C_Q[key])
        return out

    def potential_constant(self) -> float:
        return self.X_eq * self.log_cap + self.X_lin * self.K + sum(self.X_Q[k] * self.C_Q[k] for k in self.keys)

    def log_moments(self) -> dict[str, float]:
        return {key: log_moment(self.combined, Q) for Q, key in zip(self.polys, self.keys)}

    def energy(self) -> float:
        E = self.combined.expectation()
        moments = self.log_moments()
        total = self.X_eq * self.log_cap + self.X_lin * (E + self.K)
        for Q, key in zip(self.polys, self.keys):
            total += self.X_Q[key] * (moments[key] / Q.degree + self.C_Q[key])
        return float(total)

    def boundary_ratios(self) -> np.ndarray:
        return self.combined.boundary_weights() / self.mu_eq.boundary_weights()

    def target_density(self, x) -> np.ndarray:
        if self.target is None:
            raise ValueError("no closed density form for this configuration")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.size)
        inside = np.array([self.support.contains(v) for v in x])
        if inside.any():
            xs = x[inside]
            denom = np.ones_like(xs)
            for Q in self.polys or [RealPolynomial([0.0, 1.0])]:
                denom = denom * np.abs(Q(xs))
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = self.c * np.sqrt(np.abs(self.support.H(xs))) / denom
            # a zero of the denominator on the support is the pinned endpoint 0
            out[inside] = np.where(denom == 0.0, np.inf, vals)
        return out


def _root_layout(support: SupportSet, polys: Sequence[RealPolynomial]) -> dict[str, list[float]]:
    layout: dict[str, list[float]] = {}
    all_roots = []
    for Q in polys:
        rs = polynomial_roots(Q)
        for r in rs:
            if support.contains(r):
                raise RootOnSupport(f"root {r:.12g} of {format_poly(Q)} lies on the support")
        layout[format_poly(Q)] = rs
        all_roots += rs
    for i, (a, b) in enumerate(support.gaps()):
        inside = [r for r in all_roots if a < r < b]
        if len(inside) != 1:
            raise GapRootMismatch(f"gap {i} ({a:.8g}, {b:.8g}) holds {len(inside)} roots; exactly one required")
    outside = [r for r in all_roots if r < support.endpoints[0] or r > support.endpoints[-1]]
    if len(outside) != 1:
        raise GapRootMismatch(f"{len(outside)} roots lie outside the hull of the support; exactly one required")
    return layout


def residue_coefficients(support: SupportSet, polys: Sequence[RealPolynomial], c: float) -> dict[str, float]:
    """X_Q from matching the residues of the target density at the roots of Q.

    Per root alpha the residue gives c*pi*sqrt|H(alpha)| / |D'(alpha)| with D the
    product of all constraint polynomials; X_Q uses the geometric mean over
    the roots of Q, times -deg(Q).
    """
    out = {}
    for Q in polys:
        roots = polynomial_roots(Q)
        dQ = Q.derivative()
        logs = []
        for r in roots:
            dD = abs(dQ(r))
            for P in polys:
                if P is not Q:
                    dD *= abs(P(r))
            logs.append(math.log(_sqrt_abs_H(support, r)) - math.log(dD))
        out[format_poly(Q)] = -Q.degree * c * math.pi * math.exp(sum(logs) / len(logs))
    return out


def candidate_measure(
    support: SupportSet,
    polys: Sequence[RealPolynomial],
    cfg: QuadratureConfig | None = None,
    strict: bool = False,
    coefficients: tuple[float, Mapping[str, float]] | None = None,
) -> MeasureBundle:
    """Assemble mu = X_eq mu_eq + X_lin mu_lin + sum X_Q mu_Q on the support.

    X_lin = c*pi and the X_Q come from the target density c sqrt|H| / prod|Q|;
    X_eq balances the total mass. ``coefficients`` overrides (X_lin, X_Q), as
    needed when rebuilding a stored certificate.
    """
    cfg = cfg or QuadratureConfig()
    polys = list(polys)
    mu_eq = equilibrium_measure(support, cfg)
    log_cap = mu_eq.offset
    mu_lin = linear_potential_measure(support, mu_eq, cfg, zero_mass=False)
    K = mu_lin.offset
    mass_lin = mu_lin.mass()

    if not polys:
        if support.n_intervals != 1 or support.endpoints[0] != 0.0:
            raise GapRootMismatch("without constraint polynomials the support must be one interval starting at 0")
        a, b = support.interval(0)
        target = SqrtMeasure.from_weighted(support, lambda y, k: (b - y), cfg, label="target")
        c = 1.0 / target.mass()
        target = target.scaled(c)
        lin_b = mu_lin.weighted_at(b, 0) / mu_eq.weighted_at(b, 0)
        X_lin = 1.0 / (mass_lin - lin_b) if coefficients is None else coefficients[0]
        X_eq = 1.0 - X_lin * mass_lin
        combined = combine([(X_eq, mu_eq), (X_lin, mu_lin)], label="mu")
        return MeasureBundle(support, [], mu_eq, mu_lin, {}, X_eq, X_lin, {}, c, {}, K, log_cap, combined, target)

    layout = _root_layout(support, polys)
    keys = [format_poly(Q) for Q in polys]

    def target_weighted(y, k):
        a, b = support.interval(k)
        denom = np.ones_like(y)
        for Q in polys:
            denom = denom * np.abs(Q(y))
        return (b - y) * (y - a) * support.sqrt_rest(y, k) / denom

    target = SqrtMeasure.from_weighted(support, target_weighted, cfg, label="target")
    c = 1.0 / target.mass()
    target = target.scaled(c)

    if coefficients is None:
        X_lin = c * math.pi
        X_Q = residue_coefficients(support, polys, c)
    else:
        X_lin = float(coefficients[0])
        X_Q = {k: float(coefficients[1][k]) for k in keys}

    mu_Q, C_Q = {}, {}
    for Q, key in zip(polys, keys):
        mu_Q[key], C_Q[key] = measure_for_polynomial(support, Q, cfg)
    X_eq = 1.0 - X_lin * mass_lin - sum(X_Q.values())
    terms = [(X_eq, mu_eq), (X_lin, mu_lin)] + [(X_Q[k], mu_Q[k]) for k in keys]
    combined = combine(terms, label="mu")
    bundle = MeasureBundle(
        support, polys, mu_eq, mu_lin, mu_Q, X_eq, X_lin, X_Q, c, C_Q, K, log_cap, combined, target, layout
    )
    if strict:
        for k in range(support.n_intervals):
            _, v, _ = combined.node_values(k)
            if np.min(v) < -1e-12 * np.max(np.abs(v)):
                raise NegativeDensity(f"combined density is negative on interval {k}")
    return bundle


# Functionals ------------------------------------------------------------------------


def potential_at(mu, x):
    if isinstance(mu, MeasureBundle):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        on = np.array([mu.support.contains(v) for v in x_arr])
        out = np.empty(x_arr.size)
        if on.any():
            out[on] = mu.potential_on_support(x_arr[on])
        if (~on).any():
            out[~on] = mu.combined.potential(x_arr[~on])
        return float(out[0]) if np.ndim(x) == 0 else out
    return mu.potential(x)


def energy(mu) -> float:
    """I(mu) = int U_mu d(mu)."""
    if isinstance(mu, MeasureBundle):
        return mu.energy()
    total = 0.0
    for k in range(mu.support.n_intervals):
        y, v, n = mu.node_values(k)
        total += float(np.sum(mu.potential(y) * v) * np.pi / n)
    return total


def log_moment(mu, Q: RealPolynomial) -> float:
    """int log|Q| d(mu), as the sum of potentials at the roots of Q."""
    if isinstance(mu, MeasureBundle):
        mu = mu.combined
    roots = polynomial_roots(Q)
    for r in roots:
        if mu.support.contains(r):
            raise RootOnSupport(f"root {r:.12g} lies on the support")
    total = math.log(abs(Q.leading)) * mu.mass()
    return float(total + np.sum(mu.potential(np.array(roots))))


def expectation(mu) -> float:
    if isinstance(mu, MeasureBundle):
        mu = mu.combined
    return mu.expectation()


def density_table(mu: MeasureBundle, samples_per_interval: int = 200) -> list[tuple[float, float]]:
    """(x, density) pairs at theta-uniform points of every interval, endpoints included."""
    rows = []
    for a, b in mu.support.intervals():
        theta = np.linspace(np.pi, 0.0, samples_per_interval)
        xs = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(theta)
        xs[0], xs[-1] = a, b
        for x, d in zip(xs, mu.target_density(xs)):
            rows.append((float(x), float(d)))
    return rows
