"""Regenerate the bundled certificates under src/tracebound/fixtures/."""

from pathlib import Path

from tracebound.certificate import certificate_from_bundle
from tracebound.closedform import solve_schur, solve_siegel
from tracebound.measures import candidate_measure
from tracebound.polynomial import parse_poly
from tracebound.quadrature import SupportSet

OUT = Path(__file__).resolve().parents[1] / "src" / "tracebound" / "fixtures"

SUPPORTS = {
    "cor15": (["x", "x-1"], [0.0362736, 0.828301, 1.190973, 5.707091]),
    "cor16": (
        ["x", "x-1", "x^2-3x+1"],
        [0.0409275, 0.34114487, 0.4252603, 0.811681, 1.211488, 2.4844644, 2.7580631, 5.52512172],
    ),
    "cor17": (
        ["x", "x-1", "x^2-3x+1", "x^3-5x^2+6x-1"],
        [
            0.04299491807925009, 0.1859914049100783, 0.2104756929603335, 0.33831784130520615,
            0.42840285408953455, 0.804598700230365, 1.2208782797696687, 1.5167041310779525,
            1.5933467096187162, 2.474901146984523, 2.7690575129408894, 3.17915998503281,
            3.316051282538935, 5.451640604980446,
        ],
    ),
    "cor18": (
        ["x", "x-1", "x-2", "x^2-3x+1", "x^3-5x^2+6x-1"],
        [
            0.0471087, 0.1853294, 0.2111668, 0.3366947, 0.4302177, 0.8002212, 1.2265017, 1.5147818,
            1.5952680, 1.9682074, 2.0322047, 2.4696444, 2.7748974, 3.1757843, 3.3195325, 5.3996085,
        ],
    ),
    "cor19": (
        ["x", "x-1", "x-2", "x^2-3x+1", "x^3-5x^2+6x-1", "x^4-7x^3+13x^2-7x+1", "x^4-7x^3+14x^2-8x+1"],
        [
            0.04865408503826852, 0.16838086459949675, 0.17793629526825372, 0.18381722534054817,
            0.21253313678602553, 0.22282035304382763, 0.23253131212733313, 0.334984842461472,
            0.43216747313335424, 0.5373228627969677, 0.550940510634415, 0.6532454870830763,
            0.670400493178262, 0.7958974217799853, 1.231938449021274, 1.512221832046952,
            1.5978271338062664, 1.824427783903187, 1.8513776664372048, 1.9655369583386315,
            2.03493221184841, 2.192435667557317, 2.225841072618397, 2.463928802821324,
            2.7812624054781394, 3.1712064294805336, 3.324272345876191, 3.926025595570322,
            3.9869925948499505, 4.354455187341252, 4.426850255141888, 5.35617801397137,
        ],
    ),
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    _, a, b = solve_schur()
    sol = solve_siegel()
    jobs = {"schur": ([], [a, b]), "siegel": (["x"], [sol.a, sol.b]), **SUPPORTS}
    for name, (polys, endpoints) in jobs.items():
        bundle = candidate_measure(SupportSet(endpoints), [parse_poly(p) for p in polys])
        cert = certificate_from_bundle(bundle)
        cert.save(OUT / f"{name}.json")
        print(f"{name}: lambda={cert.lam:.9f} certified={cert.certified_bound:.9f}")


if __name__ == "__main__":
    main()
