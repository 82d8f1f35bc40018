"""Gradient descent on support endpoints.

The residual vector at a support is [I(mu), delta_0, ..., delta_{2l+1},
int log|Q| d(mu) for each Q], all of which vanish at the optimal support.
The objective is its squared norm; gradients come from central differences,
one endpoint per worker.
"""

from __future__ import annotations

import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .certificate import Certificate, certificate_from_bundle, estimate_lambda, dual_coefficients
from .closedform import SQRT_E
from .measures import candidate_measure, polynomial_roots
from .polynomial import RealPolynomial
from .quadrature import DOMAIN, QuadratureConfig, SupportSet

MIN_SEPARATION = 1e-6


class Stalled(RuntimeError):
    """The line search could not decrease the objective any further.

    ``state`` holds the last accepted iterate and its history.
    """

    def __init__(self, message: str, state: "DescentState | None" = None):
        super().__init__(message)
        self.state = state


class RootOutOfRange(ValueError):
    """A constraint polynomial has a root outside the domain (or a non-real root)."""


@dataclass
class DescentConfig:
    fd_step: float = 1e-6
    max_iters: int = 100_000
    objective_tol: float = 1e-16
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    growth: float = 2.0
    initial_step: float = 1e-2
    min_step: float = 1e-20
    threads: int | None = None
    raw_boundary: bool = False
    checkpoint_every: int = 0
    checkpoint_path: str | None = None
    log: Callable[[str], None] | None = None

    def __post_init__(self):
        for name in ("fd_step", "objective_tol", "shrink", "sufficient_decrease", "growth", "initial_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if not self.shrink < 1:
            raise ValueError("shrink must be below 1")


@dataclass
class DescentState:
    endpoints: np.ndarray
    residuals: np.ndarray
    objective: float
    iteration: int = 0
    history: list[float] = field(default_factory=list)

    def check(self) -> None:
        assert np.all(np.diff(self.endpoints) > 0)
        assert self.endpoints[0] >= DOMAIN[0] and self.endpoints[-1] <= DOMAIN[1]
        assert math.isclose(self.objective, float(np.sum(self.residuals**2)), rel_tol=1e-12, abs_tol=1e-300)


def pinned_indices(polys: Sequence[RealPolynomial]) -> set[int]:
    """Without constraint polynomials the left endpoint stays at 0."""
    return {0} if not polys else set()


def residuals(
    support: SupportSet,
    polys: Sequence[RealPolynomial],
    cfg: QuadratureConfig | None = None,
    raw_boundary: bool = False,
) -> np.ndarray:
    bundle = candidate_measure(support, polys, cfg)
    if polys:
        if raw_boundary:
            boundary = bundle.combined.boundary_weights()
        else:
            boundary = bundle.boundary_ratios()
        moments = bundle.log_moments()
        return np.array([bundle.energy(), *boundary, *(moments[k] for k in bundle.keys)])
    return np.array([bundle.energy()])


def _objective_at(endpoints, polys, qcfg, raw) -> float:
    try:
        support = SupportSet(endpoints)
        r = residuals(support, polys, qcfg, raw)
    except ValueError:
        return math.inf
    return float(np.sum(r**2))


def _perturbed(endpoints: np.ndarray, i: int, h: float) -> np.ndarray:
    x = endpoints.copy()
    x[i] += h
    lo = x[i - 1] + 1e-9 if i > 0 else DOMAIN[0]
    hi = x[i + 1] - 1e-9 if i + 1 < x.size else DOMAIN[1]
    x[i] = min(max(x[i], lo), hi)
    return x


def gradient(
    support: SupportSet,
    polys: Sequence[RealPolynomial],
    cfg: DescentConfig | None = None,
    qcfg: QuadratureConfig | None = None,
    step_scale: float = 1.0,
) -> np.ndarray:
    """Central differences of the objective, one coordinate per task, reduced in index order."""
    cfg = cfg or DescentConfig()
    x = np.array(support.endpoints)
    pinned = pinned_indices(polys)

    def component(i):
        if i in pinned:
            return 0.0
        h = cfg.fd_step * step_scale * max(1.0, abs(x[i]))
        up, down = _perturbed(x, i, h), _perturbed(x, i, -h)
        span = up[i] - down[i]
        if span <= 0:
            return 0.0
        return (_objective_at(up, polys, qcfg, cfg.raw_boundary) - _objective_at(down, polys, qcfg, cfg.raw_boundary)) / span

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        parts = list(pool.map(component, range(x.size)))
    return np.array(parts)


def one_sided_gradient(support, polys, h: float, qcfg: QuadratureConfig | None = None) -> np.ndarray:
    """Forward differences with absolute step h; used for Richardson consistency checks."""
    x = np.array(support.endpoints)
    base = _objective_at(x, polys, qcfg, False)
    pinned = pinned_indices(polys)
    out = np.zeros(x.size)
    for i in range(x.size):
        if i not in pinned:
            out[i] = (_objective_at(_perturbed(x, i, h), polys, qcfg, False) - base) / h
    return out


def _valid(x: np.ndarray) -> bool:
    return bool(x[0] >= DOMAIN[0] and x[-1] <= DOMAIN[1] and np.all(np.diff(x) >= MIN_SEPARATION))


def _checkpoint(path: str, support: SupportSet, polys, qcfg) -> None:
    bundle = candidate_measure(support, polys, qcfg)
    certificate_from_bundle(bundle, qcfg).save(path)


def run_descent(
    support: SupportSet,
    polys: Sequence[RealPolynomial],
    cfg: DescentConfig | None = None,
    qcfg: QuadratureConfig | None = None,
) -> tuple[SupportSet, Certificate, DescentState]:
    """Backtracking gradient descent until the objective drops below tolerance.

    Raises Stalled when the line search cannot make progress while the
    objective is still above tolerance.
    """
    cfg = cfg or DescentConfig()
    polys = list(polys)
    log = cfg.log or (lambda line: print(line, file=sys.stderr))
    x = np.array(support.endpoints, dtype=float)
    r = residuals(support, polys, qcfg, cfg.raw_boundary)
    state = DescentState(endpoints=x, residuals=r, objective=float(np.sum(r**2)))
    state.history.append(state.objective)
    step = cfg.initial_step
    prev_x = prev_grad = None

    while state.objective > cfg.objective_tol and state.iteration < cfg.max_iters:
        grad = gradient(SupportSet(state.endpoints), polys, cfg, qcfg)
        gnorm2 = float(grad @ grad)
        if gnorm2 == 0.0 or not math.isfinite(gnorm2):
            raise Stalled(f"gradient vanished or is undefined at objective {state.objective:.3e}", state)
        if prev_grad is not None:
            # Barzilai-Borwein trial step; backtracking below keeps the decrease monotone
            s_vec, y_vec = state.endpoints - prev_x, grad - prev_grad
            sy = float(s_vec @ y_vec)
            if sy > 0.0:
                step = float(s_vec @ s_vec) / sy
        prev_x, prev_grad = state.endpoints.copy(), grad
        accepted = False
        while step >= cfg.min_step:
            trial = state.endpoints - step * grad
            if _valid(trial):
                try:
                    tr = residuals(SupportSet(trial), polys, qcfg, cfg.raw_boundary)
                    tobj = float(np.sum(tr**2))
                except ValueError:
                    tobj = math.inf
                if tobj <= state.objective - cfg.sufficient_decrease * step * gnorm2:
                    accepted = True
                    break
            step *= cfg.shrink
        if not accepted:
            raise Stalled(f"line search failed at iteration {state.iteration}, objective {state.objective:.3e}", state)
        state.endpoints, state.residuals, state.objective = trial, tr, tobj
        state.iteration += 1
        state.history.append(tobj)
        state.check()
        step *= cfg.growth
        bundle = None
        if cfg.log is not False:
            bundle = candidate_measure(SupportSet(trial), polys, qcfg)
            lam0, lamq = dual_coefficients(bundle)
            lam, _ = estimate_lambda(bundle, lam0, lamq, samples=5)
            log(f"{state.iteration},{tobj:.6e},{lam:.12f}")
        if cfg.checkpoint_every and cfg.checkpoint_path and state.iteration % cfg.checkpoint_every == 0:
            _checkpoint(cfg.checkpoint_path, SupportSet(trial), polys, qcfg)

    final = SupportSet(state.endpoints)
    cert = certificate_from_bundle(candidate_measure(final, polys, qcfg), qcfg)
    return final, cert, state


def default_init(polys: Sequence[RealPolynomial]) -> SupportSet:
    """Intervals bracketing the sorted roots of the constraint polynomials."""
    right_default = min(round(4.0 * SQRT_E, 1), DOMAIN[1])
    if not polys:
        return SupportSet([0.0, right_default])
    roots = []
    for Q in polys:
        try:
            rs = polynomial_roots(Q)
        except ValueError as exc:
            raise RootOutOfRange(str(exc)) from exc
        for r in rs:
            if not DOMAIN[0] <= r <= DOMAIN[1]:
                raise RootOutOfRange(f"root {r:.6g} outside [{DOMAIN[0]}, {DOMAIN[1]}]")
        roots += rs
    roots = sorted(set(round(r, 12) for r in roots))
    left = roots[0] + 0.05 * (min(1.0, roots[1] - roots[0]) if len(roots) > 1 else 1.0)
    right = min(max(right_default, roots[-1] + 1.0), DOMAIN[1])
    pts = [left]
    for i in range(1, len(roots)):
        r = roots[i]
        gap = r - roots[i - 1] if i + 1 == len(roots) else min(r - roots[i - 1], roots[i + 1] - r)
        pts += [r - 0.05 * gap, r + 0.05 * gap]
    pts.append(right)
    return SupportSet(pts)
