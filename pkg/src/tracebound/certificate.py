"""Lower-bound certificates for the trace problem and their verification.

A certificate stores the support, the dual coefficients (lambda, lambda0,
lambda_Q) and the boundary defect delta. The measure is rebuilt from these
numbers alone, then three things are checked:

* the dual equality x = lambda + sum lambda_Q log|Q| + lambda0 (U - I/2) on
  the support,
* positivity of the second-derivative bound on every gap, on both sides of
  the single constraint root in that gap,
* the boundary ratios delta_i that enter the final penalty
  delta * lambda0 * log 18.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .measures import MeasureBundle, candidate_measure, polynomial_roots
from .polynomial import format_poly, parse_poly
from .quadrature import DOMAIN, QuadratureConfig, SupportSet

LOG_18 = math.log(18.0)
FIELDS = ("polys", "endpoints", "lambda", "lambda0", "lambdaQ", "c", "delta", "certified_bound")


class MalformedCertificate(ValueError):
    """Certificate JSON is missing fields or has values of the wrong type."""


class MultipleRootsInGap(ValueError):
    """A gap holds more than one root of the constraint polynomials."""


@dataclass
class Certificate:
    polys: list[str]
    endpoints: list[float]
    lam: float
    lambda0: float
    lambdaQ: dict[str, float]
    c: float
    delta: float
    certified_bound: float

    def to_dict(self) -> dict:
        return {
            "polys": list(self.polys),
            "endpoints": list(self.endpoints),
            "lambda": self.lam,
            "lambda0": self.lambda0,
            "lambdaQ": dict(self.lambdaQ),
            "c": self.c,
            "delta": self.delta,
            "certified_bound": self.certified_bound,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> "Certificate":
        if not isinstance(data, dict):
            raise MalformedCertificate("certificate must be a JSON object")
        missing = [k for k in FIELDS if k not in data]
        if missing:
            raise MalformedCertificate(f"missing fields: {', '.join(missing)}")
        try:
            polys = [format_poly(parse_poly(str(p))) for p in data["polys"]]
            lamq = {format_poly(parse_poly(k)): float(v) for k, v in dict(data["lambdaQ"]).items()}
            cert = cls(
                polys=polys,
                endpoints=[float(a) for a in data["endpoints"]],
                lam=float(data["lambda"]),
                lambda0=float(data["lambda0"]),
                lambdaQ=lamq,
                c=float(data["c"]),
                delta=float(data["delta"]),
                certified_bound=float(data["certified_bound"]),
            )
        except (TypeError, ValueError) as exc:
            raise MalformedCertificate(str(exc)) from exc
        if set(cert.lambdaQ) != set(cert.polys):
            raise MalformedCertificate("lambdaQ keys must match polys")
        return cert

    @classmethod
    def load(cls, path) -> "Certificate":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedCertificate(str(exc)) from exc
        return cls.from_dict(data)

    @property
    def support(self) -> SupportSet:
        return SupportSet(self.endpoints)

    @property
    def polynomials(self):
        return [parse_poly(p) for p in self.polys]


@dataclass
class VerificationReport:
    equality_max_dev: float
    delta_max: float
    convexity_ok_per_gap: list[bool]
    grid_min_g: float
    certified_bound: float
    passed: bool
    lambda0_positive: bool = True
    lambdaQ_nonnegative: bool = True
    convexity_margin: list[float] = field(default_factory=list)
    expectation: float = float("nan")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out

    def format(self) -> str:
        rows = [
            ("equality_max_dev", f"{self.equality_max_dev:.3e}"),
            ("delta_max", f"{self.delta_max:.3e}"),
            ("convexity_ok", f"{sum(self.convexity_ok_per_gap)}/{len(self.convexity_ok_per_gap)} gaps"),
            ("grid_min_g", f"{self.grid_min_g:.3e}"),
            ("lambda0 > 0", str(self.lambda0_positive)),
            ("lambdaQ >= 0", str(self.lambdaQ_nonnegative)),
            ("expectation", f"{self.expectation:.9f}"),
            ("certified_bound", f"{self.certified_bound:.9f}"),
            ("pass", str(self.passed)),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


# Boundary ratios -------------------------------------------------------------


def relevant_endpoints(support: SupportSet) -> list[int]:
    """Endpoints where a boundary defect matters; a left end at 0 is the edge of the domain."""
    return [i for i, a in enumerate(support.endpoints) if not (i == 0 and a == DOMAIN[0])]


def boundary_ratios(bundle: MeasureBundle) -> np.ndarray:
    """delta_i = lim (d mu / d mu_eq) at every endpoint a_i, from the weighted densities."""
    return bundle.boundary_ratios()


# Building a certificate -------------------------------------------------------


def dual_coefficients(bundle: MeasureBundle) -> tuple[float, dict[str, float]]:
    lam0 = 1.0 / bundle.X_lin
    lamq = {k: -bundle.X_Q[k] / (bundle.X_lin * bundle.degree(k)) for k in bundle.keys}
    return lam0, lamq


def dual_gap(bundle: MeasureBundle, lam: float, lam0: float, lamq: dict[str, float], x, energy_value: float):
    """x - lambda - sum lambda_Q log|Q(x)| - lambda0 (U(x) - I/2), with U by quadrature."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = x - lam0 * (bundle.combined.potential(x) - energy_value / 2.0)
        for Q, key in zip(bundle.polys, bundle.keys):
            out = out - lamq[key] * np.log(np.abs(Q(x)))
    return out - lam


def support_samples(support: SupportSet, per_interval: int) -> np.ndarray:
    pts = []
    for a, b in support.intervals():
        theta = (np.arange(per_interval) + 0.5) * np.pi / per_interval
        pts.append(0.5 * (a + b) + 0.5 * (b - a) * np.cos(theta))
    return np.concatenate(pts)


def estimate_lambda(bundle: MeasureBundle, lam0: float, lamq: dict[str, float], samples: int = 20) -> tuple[float, float]:
    """Mean and spread of the dual constant over support samples."""
    x = support_samples(bundle.support, samples)
    vals = dual_gap(bundle, 0.0, lam0, lamq, x, bundle.energy())
    return float(np.mean(vals)), float(np.max(vals) - np.min(vals))


def certificate_from_bundle(bundle: MeasureBundle, cfg: QuadratureConfig | None = None) -> Certificate:
    """Turn a converged measure into a certificate.

    If some boundary ratio is negative the measure is mixed with mu_eq just
    enough to make the smallest ratio zero; lambda_Q are unchanged by this
    and lambda0 scales by 1/(1 - eps).
    """
    idx = relevant_endpoints(bundle.support)
    ratios = bundle.boundary_ratios()[idx] if idx else np.zeros(0)
    low = float(np.min(ratios)) if ratios.size else 0.0
    if low < 0.0:
        eps = -low / (1.0 - low)
        lam0, lamq = dual_coefficients(bundle)
        X_lin = (1.0 - eps) * bundle.X_lin
        X_Q = {k: (1.0 - eps) * v for k, v in bundle.X_Q.items()}
        bundle = candidate_measure(bundle.support, bundle.polys, cfg, coefficients=(X_lin, X_Q))
        ratios = bundle.boundary_ratios()[idx]
    lam0, lamq = dual_coefficients(bundle)
    lam, _ = estimate_lambda(bundle, lam0, lamq)
    delta = max(float(np.max(ratios)) if ratios.size else 0.0, 0.0)
    return Certificate(
        polys=list(bundle.keys),
        endpoints=list(bundle.support.endpoints),
        lam=lam,
        lambda0=lam0,
        lambdaQ=lamq,
        c=bundle.c,
        delta=delta,
        certified_bound=lam - delta * lam0 * LOG_18,
    )


def rebuild_bundle(cert: Certificate, cfg: QuadratureConfig | None = None) -> MeasureBundle:
    """Measure determined by the certificate's coefficients alone."""
    polys = cert.polynomials
    X_lin = 1.0 / cert.lambda0
    X_Q = {format_poly(Q): -cert.lambdaQ[format_poly(Q)] * Q.degree / cert.lambda0 for Q in polys}
    return candidate_measure(cert.support, polys, cfg, coefficients=(X_lin, X_Q))


# Checks ----------------------------------------------------------------------------


def check_equality_on_support(cert: Certificate, bundle: MeasureBundle | None = None, per_interval: int = 100) -> float:
    bundle = bundle or rebuild_bundle(cert)
    x = support_samples(bundle.support, per_interval)
    dev = dual_gap(bundle, cert.lam, cert.lambda0, cert.lambdaQ, x, bundle.energy())
    return float(np.max(np.abs(dev)))


def _gap_roots(bundle: MeasureBundle) -> list[float]:
    roots = sorted(r for Q in bundle.polys for r in polynomial_roots(Q))
    out = []
    for a, b in bundle.support.gaps():
        inside = [r for r in roots if a < r < b]
        if len(inside) != 1:
            raise MultipleRootsInGap(f"gap ({a:.8g}, {b:.8g}) holds {len(inside)} roots")
        out.append(inside[0])
    return out


def _window_integral(bundle: MeasureBundle, delta_local: float, j: int, width: float, x: np.ndarray) -> np.ndarray:
    """int over the window at endpoint j of (mu - delta_local mu_eq)(y) / (x - y)^2 dy."""
    support = bundle.support
    k = j // 2
    a, b = support.interval(k)
    w = min(width, b - a)
    nodes, weights = np.polynomial.legendre.leggauss(64)
    s = 0.5 * math.sqrt(w) * (nodes + 1.0)
    ws = 0.5 * math.sqrt(w) * weights
    if j % 2 == 0:
        y = a + s * s
        far = np.sqrt(b - y)
    else:
        y = b - s * s
        far = np.sqrt(y - a)
    f = bundle.combined.weighted(y, k) - delta_local * bundle.mu_eq.weighted(y, k)
    # dy / sqrt(|y - a_j|) = 2 ds
    integrand = 2.0 * f / far
    return np.array([np.sum(ws * integrand / (xv - y) ** 2) for xv in x])


def _window_ok(bundle: MeasureBundle, delta_local: float, windows: list[int], width: float) -> bool:
    """f = mu - delta_local mu_eq must be non-negative off the windows."""
    support = bundle.support
    for k, (a, b) in enumerate(support.intervals()):
        y = support_samples(SupportSet([a, b], domain=None), 400)
        keep = np.ones(y.size, dtype=bool)
        for j in windows:
            if j // 2 == k:
                keep &= np.abs(y - support.endpoints[j]) > width
        f = bundle.combined.weighted(y[keep], k) - delta_local * bundle.mu_eq.weighted(y[keep], k)
        if np.any(f < 0.0):
            return False
    return True


def gap_side_margin(
    bundle: MeasureBundle,
    lam0: float,
    lamq: dict[str, float],
    side: tuple[float, float],
    anchor_endpoint: int,
    ratios: np.ndarray,
    width: float = 1e-3,
) -> float:
    """Minimum over a grid of a lower bound for the second derivative of the dual gap."""
    support = bundle.support
    delta_local = float(ratios[anchor_endpoint])
    windows = [j for j in range(len(support.endpoints)) if ratios[j] < delta_local]
    if not _window_ok(bundle, delta_local, windows, width):
        return -math.inf
    neg_mass = max(delta_local, 0.0)
    roots = {key: polynomial_roots(Q) for Q, key in zip(bundle.polys, bundle.keys)}

    def bound(x):
        total = np.zeros_like(x)
        for key, rs in roots.items():
            for r in rs:
                total += lamq[key] / (x - r) ** 2
        smeared = bundle.combined.inverse_square(x) - delta_local * bundle.mu_eq.inverse_square(x)
        for j in windows:
            smeared -= _window_integral(bundle, delta_local, j, width, x)
        total += lam0 * smeared
        if windows:
            dist = np.min([np.abs(x - support.endpoints[j]) + 0.0 for j in windows], axis=0)
            dist = np.maximum(dist - width, 0.0)
            total -= neg_mass * lam0 / dist**2
        return total

    lo, hi = side
    n = max(int(1000 * (hi - lo)), 200)
    x = lo + (hi - lo) * (np.arange(n) + 0.5) / n
    vals = bound(x)
    i = int(np.argmin(vals))
    step = (hi - lo) / n
    fine = np.linspace(max(lo, x[i] - step), min(hi, x[i] + step), 21)[1:-1]
    fine = fine[(fine > lo) & (fine < hi)]
    if fine.size:
        vals = np.concatenate([vals, bound(fine)])
    return float(np.min(vals))


def check_gap_convexity(
    cert: Certificate, bundle: MeasureBundle | None = None, threads: int | None = None
) -> tuple[list[bool], list[float]]:
    bundle = bundle or rebuild_bundle(cert)
    support = bundle.support
    if support.n_gaps == 0:
        return [], []
    roots = _gap_roots(bundle)
    ratios = bundle.boundary_ratios()

    def one_gap(i):
        left, right = support.gap(i)
        r = roots[i]
        m1 = gap_side_margin(bundle, cert.lambda0, cert.lambdaQ, (left, r), 2 * i + 1, ratios)
        m2 = gap_side_margin(bundle, cert.lambda0, cert.lambdaQ, (r, right), 2 * i + 2, ratios)
        return min(m1, m2)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        margins = list(pool.map(one_gap, range(support.n_gaps)))
    return [m > 0.0 for m in margins], margins


def grid_min_dual_gap(cert: Certificate, bundle: MeasureBundle, points: int = 10_000) -> float:
    x = np.linspace(DOMAIN[0], DOMAIN[1], points)
    vals = dual_gap(bundle, cert.lam, cert.lambda0, cert.lambdaQ, x, bundle.energy())
    vals = vals[~np.isnan(vals)]
    return float(np.min(vals))


def certify(cert: Certificate, cfg: QuadratureConfig | None = None, threads: int | None = None) -> VerificationReport:
    bundle = rebuild_bundle(cert, cfg)
    eq_dev = check_equality_on_support(cert, bundle)
    idx = relevant_endpoints(bundle.support)
    ratios = bundle.boundary_ratios()[idx] if idx else np.zeros(0)
    delta_max = float(np.max(ratios)) if ratios.size else 0.0
    delta_min = float(np.min(ratios)) if ratios.size else 0.0
    convex_ok, margins = check_gap_convexity(cert, bundle, threads)
    grid_min = grid_min_dual_gap(cert, bundle)
    lam0_ok = cert.lambda0 > 0.0
    lamq_ok = all(v >= 0.0 for v in cert.lambdaQ.values())
    bound = cert.lam - max(delta_max, 0.0) * cert.lambda0 * LOG_18
    passed = (
        eq_dev < 1e-6
        and all(convex_ok)
        and lam0_ok
        and lamq_ok
        and delta_min > -1e-9
        and delta_max <= cert.delta + 1e-12
    )
    return VerificationReport(
        equality_max_dev=eq_dev,
        delta_max=delta_max,
        convexity_ok_per_gap=convex_ok,
        grid_min_g=grid_min,
        certified_bound=bound,
        passed=passed,
        lambda0_positive=lam0_ok,
        lambdaQ_nonnegative=lamq_ok,
        convexity_margin=margins,
        expectation=bundle.combined.expectation(),
    )
