"""Certified approximate eigenpairs with exact arithmetic."""

from .charpoly import ExactMatrix, InputMatrix, char_poly, truncate_matrix
from .eigen import Certificate, EpsEigenpair, choose_truncation, eps_eigenpairs
from .exactnum import Ball, GaussRat, parse_complex, parse_rational
from .poly import Poly

__all__ = [
    "Ball",
    "Certificate",
    "EpsEigenpair",
    "ExactMatrix",
    "GaussRat",
    "InputMatrix",
    "Poly",
    "char_poly",
    "choose_truncation",
    "eps_eigenpairs",
    "parse_complex",
    "parse_rational",
    "truncate_matrix",
]

__version__ = "0.1.0"
