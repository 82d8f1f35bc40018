"""End-to-end acceptance checks, one test per criterion.

Each test prints a single line ``CRITERION n: PASS|FAIL ...`` and then asserts
every sub-check, so a failing line names the sub-checks that missed.
"""

import math
import time

import numpy as np
import pytest

from conftest import FIXTURES, load_cert, load_report
from oracles import log_energy, support_samples, weighted_integral
from tracebound.certificate import certificate_from_bundle, certify
from tracebound.closedform import (
    SQRT_E,
    IntervalFamilyParams,
    family_energy,
    family_expectation,
    family_log_moment,
    siegel_density,
    siegel_transcendental,
    solve_schur,
    solve_siegel,
)
from tracebound.descent import DescentConfig, Stalled, gradient, one_sided_gradient, run_descent
from tracebound.measures import (
    SqrtMeasure,
    candidate_measure,
    combine,
    energy,
    equilibrium_measure,
    gap_residuals,
    linear_potential_measure,
    log_potential_measure,
    log_potential_offset_via_image,
)
from tracebound.polynomial import RootProduct, parse_poly
from tracebound.quadrature import QuadratureConfig, SupportSet

Q64 = QuadratureConfig(nodes_per_interval=64)
COR15_INIT = [0.036, 0.83, 1.19, 5.71]
COR15_QUOTED = [0.0362736, 0.828301, 1.190973, 5.707091]


@pytest.fixture
def report(capsys):
    def emit(number, checks):
        ok = all(passed for _, passed, _ in checks)
        detail = "; ".join(f"{name} {'ok' if passed else 'MISS'} ({info})" for name, passed, info in checks)
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}")
        missed = [name for name, passed, _ in checks if not passed]
        assert not missed, f"criterion {number} missed: {missed}"

    return emit


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def finish(support, polys, cfg, qcfg):
    """Run descent and return (support, certificate, state), also when it stalls."""
    try:
        return run_descent(support, polys, cfg, qcfg)
    except Stalled as exc:
        final = SupportSet(exc.state.endpoints)
        return final, certificate_from_bundle(candidate_measure(final, polys, qcfg), qcfg), exc.state


def monotone(history):
    return all(b <= a for a, b in zip(history, history[1:]))


def test_criterion_1_schur(report):
    (lam, a, b), t_closed = timed(solve_schur)
    (final, cert, _), t_numeric = timed(
        lambda: finish(SupportSet([0.0, 6.6]), [], DescentConfig(log=False), Q64)
    )
    report(
        1,
        [
            ("closed form", abs(lam - 1.6487212707001282) < 1e-9 and abs(lam - SQRT_E) < 1e-9, f"{lam:.12f}"),
            ("numeric pipeline", abs(cert.lam - lam) < 1e-6 and final.endpoints[0] == 0.0, f"{cert.lam:.10f}"),
            ("runtime", t_closed + t_numeric < 1.0, f"{t_closed + t_numeric:.2f}s"),
        ],
    )


def test_criterion_2_siegel(report):
    def pipeline():
        sol = solve_siegel()
        bundle = candidate_measure(SupportSet([sol.a, sol.b]), [parse_poly("x")])
        x = np.linspace(sol.a, sol.b, 202)[1:-1]
        return sol, float(np.max(np.abs(bundle.combined.density(x) - siegel_density(sol, x))))

    (sol, density_err), elapsed = timed(pipeline)
    report(
        2,
        [
            ("value", abs(sol.E - 1.7336105) <= 1e-6, f"{sol.E:.10f}"),
            ("transcendental", abs(siegel_transcendental(sol.nu)) < 1e-10, f"{siegel_transcendental(sol.nu):.1e}"),
            ("candidate density", density_err < 1e-6, f"{density_err:.1e}"),
            ("runtime", elapsed < 1.0, f"{elapsed:.2f}s"),
        ],
    )


def test_criterion_3_cor15_descent(report):
    polys = [parse_poly("x"), parse_poly("x-1")]
    (final, cert, state), elapsed = timed(
        lambda: finish(SupportSet(COR15_INIT), polys, DescentConfig(max_iters=3000, log=False), Q64)
    )
    ends_err = float(np.max(np.abs(np.array(final.endpoints) - COR15_QUOTED)))
    report(
        3,
        [
            ("lambda", abs(cert.lam - 1.7773797) <= 1e-6, f"{cert.lam:.10f} after {state.iteration} iterations"),
            ("endpoints", ends_err <= 1e-4, f"max dev {ends_err:.1e}"),
            ("normalisation 1/c", abs(1 / cert.c - 6.420592) <= 1e-4, f"{1 / cert.c:.7f}"),
            ("monotone", monotone(state.history), f"objective {state.objective:.1e}"),
            ("runtime", elapsed <= 600, f"{elapsed:.0f}s"),
        ],
    )


def test_criterion_4_cor16_polish(report):
    quoted = load_cert("cor16")
    (final, cert, state), elapsed = timed(
        lambda: finish(quoted.support, quoted.polynomials, DescentConfig(max_iters=40, log=False), Q64)
    )
    report(
        4,
        [
            ("lambda", abs(cert.lam - 1.793023) <= 1e-5, f"{cert.lam:.10f} after {state.iteration} iterations"),
            ("monotone", monotone(state.history), f"{state.history[0]:.1e} to {state.objective:.1e}"),
            ("runtime", elapsed <= 600, f"{elapsed:.0f}s"),
        ],
    )


@pytest.mark.parametrize("name, target, tol", [("cor17", 1.798249, 1e-5), ("cor18", 1.7998, 1e-3)])
def test_criterion_5_fixture_verification(report, name, target, tol):
    cert = load_cert(name)
    rep, elapsed = timed(lambda: certify(cert))
    report(
        5,
        [
            (f"{name} lambda", abs(cert.lam - target) <= tol, f"{cert.lam:.9f}"),
            (f"{name} verifies", rep.passed, f"dev {rep.equality_max_dev:.1e}, delta {rep.delta_max:.1e}"),
            ("runtime", elapsed <= 60, f"{elapsed:.1f}s"),
        ],
    )


def test_criterion_6_record_bound(report):
    cert = load_cert("cor19")
    rep, elapsed = timed(lambda: certify(cert))
    gaps = rep.convexity_ok_per_gap
    checks = [
        ("equality", rep.equality_max_dev < 1e-6, f"{rep.equality_max_dev:.1e}"),
        ("delta", rep.delta_max <= 3.7e-5, f"{rep.delta_max:.1e}"),
        ("convexity", len(gaps) == 15 and all(gaps), f"{sum(gaps)}/{len(gaps)} gaps"),
        ("certified bound", rep.certified_bound >= 1.80203, f"{rep.certified_bound:.9f}"),
        ("expectation", rep.expectation <= 1.80213, f"{rep.expectation:.9f}"),
        ("verdict", rep.passed, str(rep.passed)),
        ("verification runtime", elapsed <= 300, f"{elapsed:.0f}s"),
    ]
    # polish from the certificate support: the objective starts at the quadrature noise floor
    cfg = DescentConfig(objective_tol=1e-300, max_iters=100, log=False)
    (_, _, state), polish_time = timed(lambda: finish(cert.support, cert.polynomials, cfg, Q64))
    checks += [
        ("polish monotone", monotone(state.history), f"{state.history[0]:.2e} to {state.objective:.2e}"),
        ("polish 100 iterations", state.iteration >= 100, f"{state.iteration} accepted in {polish_time:.0f}s"),
    ]
    report(6, checks)


def _spread(values):
    return float(np.max(values) - np.min(values))


def _random_support(rng, n_max=3):
    n = int(rng.integers(1, n_max + 1))
    widths = rng.uniform(0.15, 3.0, 2 * n)
    return SupportSet(np.cumsum([rng.uniform(0.05, 1.0), *widths[1:]]))


def _random_measure(s, coeffs):
    lo, hi = s.endpoints[0], s.endpoints[-1]
    mu = SqrtMeasure.from_weighted(s, lambda y, k: np.exp(np.polyval(coeffs, (y - lo) / (hi - lo))))
    return mu.scaled(1.0 / mu.mass())


def test_criterion_7_properties(report):
    rng = np.random.default_rng(20261018)
    constancy = gaps = offset = routes = slope = 0.0
    for _ in range(20):
        s = _random_support(rng, 4)
        xs = support_samples(s, 50)
        mu = equilibrium_measure(s)
        constancy = max(constancy, _spread(mu.potential(xs)))
        gaps = max(gaps, float(np.max(np.abs(gap_residuals(s, RootProduct(1.0, mu.numerator.roots))), initial=0.0)))
        lin = linear_potential_measure(s)
        for a, b in s.intervals():
            x1, x2 = a + 0.25 * (b - a), a + 0.75 * (b - a)
            slope = max(slope, abs((lin.potential(x2) - lin.potential(x1)) / (x2 - x1) - 1.0))
        lo, hi = s.gaps()[0] if s.gaps() else (0.0, s.endpoints[0])
        alpha = lo + rng.uniform(0.1, 0.9) * (hi - lo)
        nu, C = log_potential_measure(s, alpha)
        offset = max(offset, _spread(nu.potential(xs) - np.log(np.abs(xs - alpha))))
        routes = max(routes, abs(log_potential_offset_via_image(s, alpha) - C))

    closed = 0.0
    draws = 0
    while draws < 100:
        a = rng.uniform(0.05, 3.0)
        p = IntervalFamilyParams(a, a + rng.uniform(0.2, 5.0), rng.uniform(-1, 2), rng.uniform(-1, 1), check=False)
        if not p.is_nonnegative():
            continue
        draws += 1
        closed = max(
            closed,
            abs(family_expectation(p) - weighted_integral(p.numerator, p.a, p.b, lambda x: x)),
            abs(family_log_moment(p) - weighted_integral(p.numerator, p.a, p.b, math.log)),
            abs(family_energy(p) - log_energy(p.numerator, p.a, p.b)),
        )

    strict = 0
    for _ in range(50):
        s = _random_support(rng)
        m1 = _random_measure(s, rng.uniform(-1, 1, 3))
        m2 = _random_measure(s, rng.uniform(-1, 1, 3))
        gap = energy(combine([(0.5, m1), (0.5, m2)])) - 0.5 * (energy(m1) + energy(m2))
        strict += gap > 0

    polys = [parse_poly("x"), parse_poly("x-1")]
    s = SupportSet([0.05, 0.8, 1.25, 5.5])
    d1 = one_sided_gradient(s, polys, 1e-4, Q64)
    d2 = one_sided_gradient(s, polys, 5e-5, Q64)
    central = gradient(s, polys, DescentConfig(log=False), Q64)
    richardson = float(np.max(np.abs(np.abs(d2 - central) - 0.5 * np.abs(d1 - central)) / (np.abs(d1 - central) + 1e-9)))

    duality = min(load_report(n).expectation + 1e-6 - load_report(n).certified_bound for n in FIXTURES)

    report(
        7,
        [
            ("equilibrium constancy", constancy < 1e-8, f"{constancy:.1e}"),
            ("gap moments", gaps < 1e-10, f"{gaps:.1e}"),
            ("push-forward offset", offset < 1e-8, f"{offset:.1e}"),
            ("offset routes", routes < 1e-9, f"{routes:.1e}"),
            ("linear slope", slope <= 1e-8, f"{slope:.1e}"),
            ("closed forms vs quadrature", closed < 1e-5, f"{closed:.1e} over {draws} draws"),
            ("energy concavity", strict == 50, f"{strict}/50 strict"),
            ("Richardson", richardson < 0.05, f"{richardson:.1e}"),
            ("weak duality", duality >= 0, f"margin {duality:.1e}"),
        ],
    )
