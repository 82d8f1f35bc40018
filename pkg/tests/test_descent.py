import json

import numpy as np
import pytest

from tracebound.closedform import SQRT_E, solve_siegel
from tracebound.descent import (
    DescentConfig,
    DescentState,
    RootOutOfRange,
    Stalled,
    _objective_at,
    default_init,
    gradient,
    one_sided_gradient,
    residuals,
    run_descent,
)
from tracebound.polynomial import parse_poly
from tracebound.quadrature import QuadratureConfig, SupportSet

Q64 = QuadratureConfig(nodes_per_interval=64)
COR15_POLYS = [parse_poly("x"), parse_poly("x-1")]
COR15_QUOTED = [0.0362736, 0.828301, 1.190973, 5.707091]
OFF_OPTIMUM = [0.05, 0.8, 1.25, 5.5]


def quiet(**kw):
    return DescentConfig(log=lambda line: None, **kw)


class TestConfig:
    @pytest.mark.parametrize("field", ["fd_step", "objective_tol", "shrink", "sufficient_decrease", "initial_step"])
    def test_positive(self, field):
        with pytest.raises(ValueError):
            DescentConfig(**{field: 0.0})

    def test_shrink_below_one(self):
        with pytest.raises(ValueError):
            DescentConfig(shrink=1.5)

    def test_defaults(self):
        cfg = DescentConfig()
        assert (cfg.fd_step, cfg.objective_tol, cfg.max_iters) == (1e-6, 1e-16, 100_000)

    def test_state_check(self):
        r = np.array([1e-3, 2e-3])
        DescentState(np.array([0.1, 1.0]), r, float(r @ r)).check()
        with pytest.raises(AssertionError):
            DescentState(np.array([0.1, 1.0]), r, 1.0).check()


class TestResiduals:
    def test_schur(self):
        r = residuals(SupportSet([0.0, 4 * SQRT_E]), [])
        assert r.shape == (1,) and np.max(np.abs(r)) < 1e-7

    def test_siegel(self):
        sol = solve_siegel()
        r = residuals(SupportSet([sol.a, sol.b]), [parse_poly("x")])
        assert r.shape == (4,) and np.max(np.abs(r)) < 1e-6

    def test_cor15_quoted_support(self):
        r = residuals(SupportSet(COR15_QUOTED), COR15_POLYS)
        assert r.shape == (1 + 4 + 2,) and np.max(np.abs(r)) < 1e-5

    def test_raw_boundary_flag(self):
        s = SupportSet(OFF_OPTIMUM)
        normal = residuals(s, COR15_POLYS)
        raw = residuals(s, COR15_POLYS, raw_boundary=True)
        assert normal[0] == raw[0] and not np.allclose(normal[1:5], raw[1:5])


class TestGradient:
    def test_small_at_optimum(self):
        sol = solve_siegel()
        g = gradient(SupportSet([sol.a, sol.b]), [parse_poly("x")], quiet(), Q64)
        assert np.max(np.abs(g)) < 1e-6

    def test_pinned_left_end(self):
        g = gradient(SupportSet([0.0, 6.0]), [], quiet())
        assert g[0] == 0.0 and g[1] != 0.0

    def test_richardson(self):
        s = SupportSet(OFF_OPTIMUM)
        h = 1e-4
        d1 = one_sided_gradient(s, COR15_POLYS, h, Q64)
        d2 = one_sided_gradient(s, COR15_POLYS, h / 2, Q64)
        central = gradient(s, COR15_POLYS, quiet(), Q64)
        extrapolated = 2 * d2 - d1
        # one-sided errors are O(h); the extrapolation removes the leading term
        err1 = np.abs(d1 - central)
        err2 = np.abs(d2 - central)
        np.testing.assert_allclose(err2, err1 / 2, rtol=0.05, atol=1e-9)
        assert np.all(np.abs(extrapolated - central) < 0.05 * err1 + 1e-9)

    def test_descent_direction(self):
        s = SupportSet(OFF_OPTIMUM)
        x = np.array(s.endpoints)
        g = gradient(s, COR15_POLYS, quiet(), Q64)
        f0 = _objective_at(x, COR15_POLYS, Q64, False)
        for t in (1e-4, 1e-5, 1e-6):
            assert _objective_at(x - t * g / np.linalg.norm(g), COR15_POLYS, Q64, False) < f0

    def test_thread_count_does_not_change_result(self):
        s = SupportSet(OFF_OPTIMUM)
        g1 = gradient(s, COR15_POLYS, quiet(threads=1), Q64)
        g4 = gradient(s, COR15_POLYS, quiet(threads=4), Q64)
        assert np.array_equal(g1, g4)


class TestRun:
    def test_schur(self):
        final, cert, state = run_descent(SupportSet([0.0, 6.6]), [], quiet(), Q64)
        assert final.endpoints[0] == 0.0
        assert final.endpoints[1] == pytest.approx(4 * SQRT_E, abs=1e-6)
        assert cert.lam == pytest.approx(SQRT_E, abs=1e-6)

    def test_monotone_history(self):
        _, _, state = run_descent(SupportSet(OFF_OPTIMUM), COR15_POLYS, quiet(max_iters=15), Q64)
        assert state.iteration == 15
        assert all(b <= a for a, b in zip(state.history, state.history[1:]))

    def test_log_lines(self):
        lines = []
        run_descent(SupportSet(OFF_OPTIMUM), COR15_POLYS, DescentConfig(max_iters=3, log=lines.append), Q64)
        assert len(lines) == 3
        it, obj, lam = lines[-1].split(",")
        assert int(it) == 3 and float(obj) >= 0 and 1.7 < float(lam) < 1.8

    def test_checkpoint(self, tmp_path):
        path = tmp_path / "ck.json"
        run_descent(
            SupportSet(OFF_OPTIMUM),
            COR15_POLYS,
            quiet(max_iters=4, checkpoint_every=2, checkpoint_path=str(path)),
            Q64,
        )
        data = json.loads(path.read_text())
        assert data["polys"] == ["x", "x-1"] and len(data["endpoints"]) == 4

    def test_stalls_at_numerical_floor(self):
        sol = solve_siegel()
        with pytest.raises(Stalled):
            run_descent(SupportSet([sol.a, sol.b]), [parse_poly("x")], quiet(objective_tol=1e-300, max_iters=200), Q64)

    def test_deterministic(self):
        runs = [run_descent(SupportSet(OFF_OPTIMUM), COR15_POLYS, quiet(max_iters=5, threads=t), Q64) for t in (1, 3)]
        assert runs[0][1] == runs[1][1]

    def test_separation_respected(self):
        # intervals that nearly touch: accepted steps keep endpoints at least 1e-6 apart
        s = SupportSet([0.05, 0.999, 1.001, 5.5])
        final, _, _ = run_descent(s, COR15_POLYS, quiet(max_iters=5), Q64)
        assert np.min(np.diff(final.endpoints)) >= 1e-6


class TestDefaultInit:
    def test_empty(self):
        assert default_init([]).endpoints == (0.0, 6.6)

    def test_single(self):
        assert default_init([parse_poly("x")]).endpoints == pytest.approx((0.05, 6.6))

    def test_two(self):
        s = default_init(COR15_POLYS)
        assert s.n_intervals == 2
        left, right = s.gap(0)
        assert left < 1 < right

    def test_one_root_per_gap(self):
        polys = [parse_poly(p) for p in ["x", "x-1", "x-2", "x^2-3x+1", "x^3-5x^2+6x-1"]]
        s = default_init(polys)
        roots = sorted(r for Q in polys for r in np.roots(Q.coeffs[::-1]).real)
        for a, b in s.gaps():
            assert sum(a < r < b for r in roots) == 1

    def test_out_of_range(self):
        with pytest.raises(RootOutOfRange):
            default_init([parse_poly("x-20")])
        with pytest.raises(RootOutOfRange):
            default_init([parse_poly("x^2+1")])
