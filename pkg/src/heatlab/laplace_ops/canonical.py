"""Canonical connection and endomorphism of a Laplace-type operator.

An operator ``D = -(g^ij d_i d_j + A^k d_k + B)`` acting on a bundle of fiber
dimension ``f`` is rewritten as ``D = -(g^ij nabla_i nabla_j + E)`` with

    omega_i = 1/2 g_ij (A^j + g^kl Gamma_kl^j id)
    E       = B - g^ij (d_i omega_j + omega_i omega_j - omega_k Gamma_ij^k)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DimensionMismatchError, MissingJetError
from ..tensor_core.curvature import christoffel_series
from ..tensor_core.jets import MetricJet
from ..tensor_core.taylor import Taylor, contract


@dataclass(frozen=True)
class LaplaceCoefficients:
    """Coefficients of a Laplace-type operator at a point, with Taylor jets.

    ``A[k]`` is the jet list ``[A, dA, d2A, ...]`` with ``A`` of shape
    ``(m, f, f)`` and derivative axes appended; likewise ``B`` starts with an
    ``(f, f)`` matrix.  ``polynomial=True`` declares the jets beyond the last
    stored one to vanish.  The leading symbol is ``ginv`` times the identity;
    ``ginv`` must agree with the metric jet handed to :func:`canonicalize`.
    """

    A: list
    B: list
    ginv: np.ndarray | None = None
    polynomial: bool = False

    def __post_init__(self):
        a0 = np.asarray(self.A[0])
        b0 = np.asarray(self.B[0])
        if a0.ndim != 3 or a0.shape[1] != a0.shape[2]:
            raise DimensionMismatchError("A must have shape (m, f, f)")
        if b0.shape != a0.shape[1:]:
            raise DimensionMismatchError("B must be an f x f matrix matching A")
        m = a0.shape[0]
        for k, arr in enumerate(self.A):
            if np.shape(arr) != a0.shape + (m,) * k:
                raise DimensionMismatchError(f"A jet of order {k} has the wrong shape")
        for k, arr in enumerate(self.B):
            if np.shape(arr) != b0.shape + (m,) * k:
                raise DimensionMismatchError(f"B jet of order {k} has the wrong shape")
        if self.ginv is not None:
            gi = np.asarray(self.ginv, dtype=float)
            if gi.shape != (m, m) or np.max(np.abs(gi - gi.T)) > 1e-12:
                raise DimensionMismatchError("ginv must be a symmetric m x m matrix")
            np.linalg.cholesky(gi)

    @property
    def dim(self) -> int:
        return np.shape(self.A[0])[0]

    @property
    def fiber_dim(self) -> int:
        return np.shape(self.B[0])[0]

    def _series(self, jets, order: int) -> Taylor:
        jets = [np.asarray(j) for j in jets]
        if order > len(jets) - 1:
            if not self.polynomial:
                raise MissingJetError(f"operator jets reach order {len(jets) - 1}, need {order}")
            while len(jets) <= order:
                jets.append(np.zeros(jets[0].shape + (self.dim,) * len(jets), dtype=jets[0].dtype))
        return Taylor.from_derivatives(jets, self.dim, order)

    def available_order(self, which: str) -> float:
        jets = self.A if which == "A" else self.B
        return math.inf if self.polynomial else len(jets) - 1


@dataclass(frozen=True)
class CanonicalData:
    """Connection 1-form, endomorphism and bundle curvature at the point.

    ``omega[i]`` and ``domega[i, :, :, k] = d_k omega_i`` are fiber matrices;
    ``E_series`` is the Taylor series of ``E`` (its order is ``E_order``);
    ``E_lap`` is ``E_;kk`` when ``E_order >= 2``.
    """

    omega: np.ndarray
    domega: np.ndarray
    E: np.ndarray
    Omega: np.ndarray
    E_series: Taylor = field(repr=False)
    E_lap: np.ndarray | None
    g: np.ndarray
    ginv: np.ndarray
    gamma: np.ndarray
    flat_chart: bool

    @property
    def dim(self) -> int:
        return self.omega.shape[0]

    @property
    def fiber_dim(self) -> int:
        return self.E.shape[0]

    @property
    def E_order(self) -> int:
        return self.E_series.order


def _id_outer(vec: Taylor, f: int) -> Taylor:
    eye = np.eye(f)
    return vec.map(lambda c: c[..., None, None] * eye)


def canonicalize(op: LaplaceCoefficients, jet: MetricJet, e_order: int = 2) -> CanonicalData:
    """Unique connection and endomorphism with ``op = D(g, nabla, E)``.

    ``e_order`` is the highest derivative order of ``E`` wanted; it is
    lowered automatically to what the supplied jets support (at least 0).
    """
    if jet.batch_shape:
        raise DimensionMismatchError("canonicalize works at a single point")
    if op.dim != jet.dim:
        raise DimensionMismatchError(f"operator dim {op.dim} != metric dim {jet.dim}")
    if op.ginv is not None:
        if np.max(np.abs(np.asarray(op.ginv) @ jet.g - np.eye(jet.dim))) > 1e-10:
            raise DimensionMismatchError("operator leading symbol does not match the metric")
    g_avail = math.inf if jet.polynomial else jet.max_order
    k_e = min(e_order, op.available_order("B"), op.available_order("A") - 1, g_avail - 2)
    if k_e < 0:
        raise MissingJetError("canonical E needs dA, d2g and B")
    k_e = int(k_e)
    f = op.fiber_dim

    g = jet.to_taylor(k_e + 2)
    ginv = g.matinv()
    gamma = christoffel_series(g)
    a = op._series(op.A, k_e + 1)
    b = op._series(op.B, k_e)

    trace_gamma = contract("...kl,...klj->...j", ginv, gamma)
    omega = contract("...ij,...jab->...iab", g, a + _id_outer(trace_gamma, f)).scale(0.5)
    domega = omega.grad()  # [i, a, b, k] = d_k omega_i
    div = contract("...ij,...jabi->...ab", ginv, domega)
    sq = contract("...ij,...ijac->...ac", ginv, contract("...iab,...jbc->...ijac", omega, omega))
    conn = contract("...k,...kab->...ab", trace_gamma, omega)
    E = b - (div + sq - conn)

    om0 = omega.value
    dom0 = domega.value
    curl = np.einsum("jabi->ijab", dom0) - np.einsum("iabj->ijab", dom0)
    Omega = curl + np.einsum("iab,jbc->ijac", om0, om0) - np.einsum("jab,ibc->ijac", om0, om0)

    E_lap = None
    if k_e >= 2:
        nabla_e = E.grad() + (contract("...kab,...bc->...ack", omega, E)
                              - contract("...ab,...kbc->...ack", E, omega))
        second = nabla_e.grad()  # [a, c, k, j] = d_j (nabla_k E)
        om = om0
        ne = nabla_e.value
        hess = (np.einsum("ackj->acjk", second.value)
                + np.einsum("jab,bck->acjk", om, ne) - np.einsum("abk,jbc->acjk", ne, om)
                - np.einsum("jkl,acl->acjk", gamma.value, ne))
        E_lap = np.einsum("jk,acjk->ac", ginv.value, hess)

    return CanonicalData(
        omega=om0, domega=dom0, E=E.value, Omega=Omega, E_series=E,
        E_lap=E_lap, g=jet.g, ginv=ginv.value, gamma=gamma.value,
        flat_chart=jet.is_flat_chart(),
    )


def recompose(can: CanonicalData) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients ``(A, B)`` at the point of ``D(g, nabla, E)``."""
    f = can.fiber_dim
    trace_gamma = np.einsum("kl,klj->j", can.ginv, can.gamma)
    A = 2 * np.einsum("ji,iab->jab", can.ginv, can.omega) - trace_gamma[:, None, None] * np.eye(f)
    div = np.einsum("ij,jabi->ab", can.ginv, can.domega)
    sq = np.einsum("ij,iab,jbc->ac", can.ginv, can.omega, can.omega)
    conn = np.einsum("k,kab->ab", trace_gamma, can.omega)
    B = can.E + div + sq - conn
    return A, B
