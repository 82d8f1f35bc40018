"""Command-line entry point: solve, verify, closed-form, density, residuals."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from .certificate import Certificate, MalformedCertificate, certificate_from_bundle, certify, rebuild_bundle
from .closedform import schur_density, solve_schur, solve_siegel
from .descent import DescentConfig, RootOutOfRange, Stalled, default_init, residuals, run_descent
from .measures import GapRootMismatch, NegativeDensity, RootOnSupport, candidate_measure, density_table
from .polynomial import PolynomialSyntaxError, parse_poly
from .quadrature import InvalidSupport, QuadratureConfig, SupportSet

EXIT_FAIL = 1
EXIT_STALLED = 2
EXIT_INFEASIBLE = 3
EXIT_MALFORMED = 4

INFEASIBLE = (GapRootMismatch, RootOnSupport, RootOutOfRange, InvalidSupport, NegativeDensity, PolynomialSyntaxError)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _quadrature(args) -> QuadratureConfig:
    return QuadratureConfig(nodes_per_interval=args.nodes)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nodes", type=int, default=64, help="starting nodes per interval (power of two)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--json", action="store_true", help="print JSON instead of plain text")


def cmd_solve(args) -> int:
    polys = [parse_poly(p) for p in args.poly]
    qcfg = _quadrature(args)
    if not polys:
        lam, a, b = solve_schur()
        bundle = candidate_measure(SupportSet([a, b]), [], qcfg)
        cert = certificate_from_bundle(bundle, qcfg)
        cert.lam = lam
        cert.certified_bound = lam - cert.delta * cert.lambda0 * math.log(18.0)
        iters = 0
    else:
        support = SupportSet(args.init) if args.init else default_init(polys)
        cfg = DescentConfig(
            fd_step=args.fd_step,
            max_iters=args.max_iters,
            objective_tol=args.tol,
            threads=args.threads,
            checkpoint_every=args.checkpoint_every,
            checkpoint_path=args.out if args.checkpoint_every else None,
        )
        _, cert, state = run_descent(support, polys, cfg, qcfg)
        iters = state.iteration
    cert.save(args.out)
    if args.json:
        print(json.dumps({**cert.to_dict(), "iters": iters}, indent=2))
    else:
        print(f"lambda={cert.lam:.9f} certified={cert.certified_bound:.9f} iters={iters}")
    return 0


def cmd_verify(args) -> int:
    cert = Certificate.load(args.certificate)
    report = certify(cert, _quadrature(args), args.threads)
    print(json.dumps(report.to_dict(), indent=2) if args.json else report.format())
    return 0 if report.passed else EXIT_FAIL


def cmd_closed_form(args) -> int:
    if args.problem == "schur":
        lam, a, b = solve_schur()
        out = {"lambda": lam, "a": a, "b": b}
    else:
        sol = solve_siegel()
        out = {"lambda": sol.E, "g": sol.g, "nu": sol.nu, "a": sol.a, "b": sol.b}
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        width = max(len(k) for k in out)
        for k, v in out.items():
            print(f"{k:<{width}}  {v:.15g}")
    return 0


def cmd_density(args) -> int:
    cert = Certificate.load(args.certificate)
    bundle = rebuild_bundle(cert, _quadrature(args))
    rows = density_table(bundle, args.samples)
    stream = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(stream)
        writer.writerow(["x", "density"])
        for x, d in rows:
            writer.writerow([repr(x), repr(max(d, 0.0))])
    finally:
        if args.out:
            stream.close()
    return 0


def cmd_residuals(args) -> int:
    polys = [parse_poly(p) for p in args.poly]
    r = residuals(SupportSet(args.endpoints), polys, _quadrature(args))
    if args.json:
        print(json.dumps(list(map(float, r))))
    else:
        for v in r:
            print(f"{v:.6e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracebound", description="Trace lower bounds for totally positive algebraic integers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimise the support and write a certificate")
    p.add_argument("-p", "--poly", action="append", default=[], help="constraint polynomial, repeatable")
    p.add_argument("--init", type=_floats, default=None, help="comma-separated initial endpoints")
    p.add_argument("--fd-step", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--tol", type=float, default=1e-16)
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("-o", "--out", default="certificate.json")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a certificate")
    p.add_argument("certificate")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("closed-form", help="exact single-interval optima")
    p.add_argument("problem", choices=["schur", "siegel"])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_closed_form)

    p = sub.add_parser("density", help="export the certified density as CSV")
    p.add_argument("certificate")
    p.add_argument("-o", "--out", default=None)
    p.add_argument("--samples", type=int, default=200, help="samples per interval")
    _add_common(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("residuals", help="optimality residuals at a support")
    p.add_argument("-p", "--poly", action="append", default=[])
    p.add_argument("--endpoints", type=_floats, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_residuals)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MalformedCertificate as exc:
        print(f"error: malformed certificate: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except Stalled as exc:
        print(f"error: descent stalled: {exc}", file=sys.stderr)
        return EXIT_STALLED
    except INFEASIBLE as exc:
        print(f"error: infeasible configuration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
