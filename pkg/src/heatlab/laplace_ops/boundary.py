"""Boundary heat invariants a_0^bd, a_1^bd, a_2^bd for mixed boundary conditions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..exceptions import MissingJetError, UnsupportedConfigurationError
from ..tensor_core.jets import CurvaturePack
from .canonical import CanonicalData


@dataclass(frozen=True)
class BoundaryData:
    """Boundary geometry and the Dirichlet/Robin splitting of the fiber.

    ``S`` acts on the Robin (Neumann) subbundle and is stored as a full fiber
    matrix vanishing on the Dirichlet part.  ``dpsi[..., a]`` holds the
    tangential derivatives ``psi_:a``; ``None`` means tangentially constant.
    """

    L: np.ndarray
    piD: np.ndarray
    piN: np.ndarray
    S: np.ndarray | None = None
    dpsi: np.ndarray | None = None

    def __post_init__(self):
        piD = np.atleast_2d(np.asarray(self.piD, dtype=float))
        piN = np.atleast_2d(np.asarray(self.piN, dtype=float))
        f = piD.shape[0]
        object.__setattr__(self, "piD", piD)
        object.__setattr__(self, "piN", piN)
        object.__setattr__(self, "L", np.asarray(self.L, dtype=float).reshape(np.shape(self.L)))
        S = np.zeros((f, f)) if self.S is None else np.atleast_2d(np.asarray(self.S))
        object.__setattr__(self, "S", S)
        eye = np.eye(f)
        if np.max(np.abs(piD + piN - eye)) > 1e-12 or np.max(np.abs(piD @ piN)) > 1e-12:
            raise ValueError("piD and piN must be complementary projections")
        if np.max(np.abs(self.psi @ self.psi - eye)) > 1e-12:
            raise ValueError("psi = piN - piD must square to the identity")
        if np.max(np.abs(piD @ S), initial=0.0) > 1e-12 or np.max(np.abs(S @ piD), initial=0.0) > 1e-12:
            raise ValueError("S must act on the Robin subbundle only")

    @property
    def psi(self) -> np.ndarray:
        return self.piN - self.piD

    @property
    def fiber_dim(self) -> int:
        return self.piD.shape[0]

    @classmethod
    def dirichlet(cls, fiber_dim: int = 1, L=None, m: int = 1) -> "BoundaryData":
        L = np.zeros((m - 1, m - 1)) if L is None else L
        return cls(L, np.eye(fiber_dim), np.zeros((fiber_dim, fiber_dim)))

    @classmethod
    def robin(cls, S, fiber_dim: int = 1, L=None, m: int = 1) -> "BoundaryData":
        L = np.zeros((m - 1, m - 1)) if L is None else L
        S = np.asarray(S, dtype=float) * np.eye(fiber_dim) if np.ndim(S) == 0 else S
        return cls(L, np.zeros((fiber_dim, fiber_dim)), np.eye(fiber_dim), S)


def boundary_a(ell: int, bd: BoundaryData, can: CanonicalData | None = None,
               pack: CurvaturePack | None = None, m: int | None = None) -> float:
    """Boundary invariant of order ``ell`` at a boundary point.

    Frame convention: tangential indices ``0..m-2``, inward normal last.
    ``m`` defaults to ``len(L) + 1``.
    """
    if ell < 0 or ell >= 3:
        raise UnsupportedConfigurationError("boundary invariants are available for ell = 0, 1, 2")
    n = bd.L.shape[0] if bd.L.ndim == 2 else 0
    m = n + 1 if m is None else m
    f = bd.fiber_dim
    eye = np.eye(f)
    trL = float(np.trace(bd.L)) if n else 0.0
    if ell == 0:
        return 0.25 * (4 * math.pi) ** (-(m - 1) / 2) * float(np.trace(bd.psi))
    if ell == 1:
        return (4 * math.pi) ** (-m / 2) / 6 * float(np.trace(2 * trL * eye + 12 * bd.S))
    if can is None or pack is None:
        raise MissingJetError("a_2^bd needs the canonical endomorphism and the curvature")
    psi = bd.psi
    LL = float(np.sum(bd.L * bd.L)) if n else 0.0
    r_amam = float(sum(pack.riemann[a, m - 1, a, m - 1] for a in range(m - 1)))
    if bd.dpsi is None:
        dpsi_term = 0.0
        if f > 1 and not (np.allclose(bd.piD, 0) or np.allclose(bd.piN, 0)):
            warnings.warn("psi_:a not supplied; taking psi tangentially constant", stacklevel=2)
    else:
        dpsi = np.asarray(bd.dpsi)
        dpsi_term = float(np.einsum("ija,jia->", dpsi, dpsi))
    total = (96 * np.trace(psi @ can.E) + 16 * float(pack.tau) * np.trace(psi) + 8 * r_amam * np.trace(psi)
             + np.trace(13 * bd.piN - 7 * bd.piD) * trL**2 + np.trace(2 * bd.piN + 10 * bd.piD) * LL
             + 96 * trL * np.trace(bd.S) + 192 * np.trace(bd.S @ bd.S) - 12 * dpsi_term)
    return float(np.real(total)) / 384 * (4 * math.pi) ** (-(m - 1) / 2)
