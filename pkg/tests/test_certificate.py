import dataclasses
import json
import math

import numpy as np
import pytest

from conftest import FIXTURES, load_bundle, load_cert, load_report
from tracebound.certificate import (
    FIELDS,
    LOG_18,
    Certificate,
    MalformedCertificate,
    certificate_from_bundle,
    certify,
    check_equality_on_support,
    check_gap_convexity,
    relevant_endpoints,
)
from tracebound.closedform import solve_siegel
from tracebound.measures import candidate_measure
from tracebound.polynomial import parse_poly
from tracebound.quadrature import SupportSet


class TestSchema:
    def test_field_names(self):
        d = load_cert("cor15").to_dict()
        assert tuple(d) == FIELDS
        assert d["polys"] == ["x", "x-1"]

    def test_round_trip(self, tmp_path):
        cert = load_cert("cor16")
        path = tmp_path / "c.json"
        cert.save(path)
        assert Certificate.load(path) == cert
        assert json.loads(path.read_text())["lambda"] == cert.lam

    @pytest.mark.parametrize("field", FIELDS)
    def test_missing_field(self, field):
        d = load_cert("cor15").to_dict()
        del d[field]
        with pytest.raises(MalformedCertificate):
            Certificate.from_dict(d)

    @pytest.mark.parametrize(
        "field, value", [("lambda", "big"), ("endpoints", [0.1, "x"]), ("lambdaQ", [1.0]), ("polys", "x")]
    )
    def test_wrong_type(self, field, value):
        d = load_cert("cor15").to_dict()
        d[field] = value
        with pytest.raises(MalformedCertificate):
            Certificate.from_dict(d)

    def test_unreadable(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(MalformedCertificate):
            Certificate.load(path)

    @pytest.mark.parametrize("name", FIXTURES)
    def test_certified_bound_formula(self, name):
        cert = load_cert(name)
        assert cert.lambda0 > 0 and cert.delta >= 0 and all(v >= 0 for v in cert.lambdaQ.values())
        assert cert.certified_bound == pytest.approx(cert.lam - cert.delta * cert.lambda0 * math.log(18), abs=1e-15)


class TestEquality:
    def test_schur(self):
        assert check_equality_on_support(load_cert("schur")) < 1e-8

    def test_siegel(self):
        assert check_equality_on_support(load_cert("siegel")) < 1e-7

    def test_inflated_lambda_fails(self):
        cert = dataclasses.replace(load_cert("cor15"), lam=load_cert("cor15").lam + 1e-3)
        report = certify(cert)
        assert not report.passed
        assert report.equality_max_dev == pytest.approx(1e-3, rel=1e-6)


class TestBoundaryRatios:
    def test_equilibrium_itself(self):
        s = SupportSet([0.2, 0.8, 1.2, 3.0])
        polys = [parse_poly("x"), parse_poly("x-1")]
        b = candidate_measure(s, polys, coefficients=(0.0, {"x": 0.0, "x-1": 0.0}))
        np.testing.assert_allclose(b.boundary_ratios(), 1.0, atol=1e-12)

    def test_siegel_vanishes(self):
        sol = solve_siegel()
        b = candidate_measure(SupportSet([sol.a, sol.b]), [parse_poly("x")])
        assert np.max(np.abs(b.boundary_ratios())) < 1e-10

    def test_domain_edge_excluded(self):
        assert relevant_endpoints(SupportSet([0.0, 6.0])) == [1]
        assert relevant_endpoints(SupportSet([0.1, 6.0])) == [0, 1]

    def test_mixing_clears_negative_ratios(self):
        # at the 8-digit support of the two-polynomial case some ratios are slightly negative
        cert0 = load_cert("cor15")
        bundle = candidate_measure(cert0.support, cert0.polynomials)
        assert np.min(bundle.boundary_ratios()) < 0
        cert = certificate_from_bundle(bundle)
        ratios = load_bundle("cor15").boundary_ratios()
        assert np.min(ratios) > -1e-12
        assert cert.lambda0 > 1.0 / bundle.X_lin
        assert cert.lambdaQ == pytest.approx({k: -bundle.X_Q[k] / (bundle.X_lin * bundle.degree(k)) for k in bundle.keys})


class TestConvexity:
    def test_siegel_vacuous(self):
        ok, margins = check_gap_convexity(load_cert("siegel"))
        assert ok == [] and margins == []

    def test_cor15_gap_around_one(self):
        ok, margins = check_gap_convexity(load_cert("cor15"))
        assert ok == [True] and margins[0] > 0


class TestCertify:
    @pytest.mark.parametrize("name", FIXTURES)
    def test_fixtures_pass(self, name):
        report = load_report(name)
        assert report.passed
        assert report.grid_min_g >= -1e-6

    @pytest.mark.parametrize("name", FIXTURES)
    def test_weak_duality(self, name):
        report = load_report(name)
        assert report.certified_bound <= report.expectation + 1e-6

    def test_chain_monotone(self):
        chain = ["siegel", "cor15", "cor16", "cor17", "cor19"]
        bounds = [load_report(n).certified_bound for n in chain]
        assert all(b2 >= b1 - 1e-6 for b1, b2 in zip(bounds, bounds[1:]))

    def test_report_json(self):
        d = load_report("cor15").to_dict()
        assert d["pass"] is True and "passed" not in d
        assert set(d) >= {"equality_max_dev", "delta_max", "convexity_ok_per_gap", "grid_min_g", "certified_bound"}

    def test_report_text(self):
        text = load_report("cor15").format()
        assert "certified_bound" in text and text.splitlines()[-1].split() == ["pass", "True"]

    def test_penalty_constant(self):
        assert LOG_18 == math.log(18.0)
