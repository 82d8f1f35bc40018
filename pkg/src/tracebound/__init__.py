"""Potential-theoretic lower bounds for the absolute trace of totally positive algebraic integers."""

from .certificate import Certificate, VerificationReport, certify
from .closedform import solve_schur, solve_siegel
from .descent import DescentConfig, default_init, run_descent
from .measures import candidate_measure, equilibrium_measure
from .polynomial import RealPolynomial, parse_poly
from .quadrature import QuadratureConfig, SupportSet

__all__ = [
    "Certificate",
    "DescentConfig",
    "QuadratureConfig",
    "RealPolynomial",
    "SupportSet",
    "VerificationReport",
    "candidate_measure",
    "certify",
    "default_init",
    "equilibrium_measure",
    "parse_poly",
    "run_descent",
    "solve_schur",
    "solve_siegel",
]
