"""Canonical form of Laplace-type operators and closed-form heat invariants."""

from .boundary import BoundaryData, boundary_a
from .canonical import CanonicalData, LaplaceCoefficients, canonicalize, recompose
from .dolbeault import dolbeault_a2, dolbeault_coefficients, dolbeault_twist
from .euler import boundary_Q, euler_form, permutation_sign, sphere_volume, wedge_pairing
from .interior import a0, a2, a2n_leading, a4
from .twisted import twisted_circle_coefficients, twisted_circle_invariants

__all__ = [
    "BoundaryData", "CanonicalData", "LaplaceCoefficients", "a0", "a2", "a2n_leading", "a4",
    "boundary_Q", "boundary_a", "canonicalize", "dolbeault_a2", "dolbeault_coefficients",
    "dolbeault_twist", "euler_form", "permutation_sign", "recompose", "sphere_volume",
    "twisted_circle_coefficients", "twisted_circle_invariants", "wedge_pairing",
]
