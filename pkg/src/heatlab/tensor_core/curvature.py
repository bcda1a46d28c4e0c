"""Christoffel symbols, curvature and covariant derivatives from metric jets.

Everything is computed on truncated Taylor series, so the derivative jets of
Christoffel symbols, curvature and scalar invariants are exact polynomial
consequences of the input jets.
"""

from __future__ import annotations


import numpy as np

from ..exceptions import MissingJetError, SingularMetricError
from .jets import CurvaturePack, MetricJet, OneFormJet
from .taylor import Taylor, contract


def _check_invertible(jet: MetricJet) -> None:
    cond = np.linalg.cond(jet.g)
    if not np.all(np.isfinite(cond)) or np.any(cond > 1e14):
        raise SingularMetricError("metric is numerically singular")


def christoffel_series(g: Taylor) -> Taylor:
    """``Gamma[..., i, j, k] = Gamma_ij^k`` as a series one order below ``g``."""
    ginv = g.matinv()
    dg = g.grad()  # dg[a, b, c] = d_c g_ab
    first = dg.map(lambda c: 0.5 * (np.einsum("...jli->...ijl", c)
                                    + np.einsum("...ilj->...ijl", c) - c))
    return contract("...kl,...ijl->...ijk", ginv, first)


def riemann_series(g: Taylor) -> Taylor:
    """Fully covariant ``R_ijkl = g(R(d_i, d_j) d_k, d_l)``, two orders below ``g``."""
    gam = christoffel_series(g)
    dgam = gam.grad()  # dgam[j, k, l, i] = d_i Gamma_jk^l
    lin = dgam.map(lambda c: np.einsum("...jkli->...ijkl", c) - np.einsum("...iklj->...ijkl", c))
    quad = (contract("...ipl,...jkp->...ijkl", gam, gam)
            - contract("...jpl,...ikp->...ijkl", gam, gam))
    up = lin + quad  # R_ijk^l
    return contract("...ijkp,...pl->...ijkl", up, g)


def christoffel(jet: MetricJet) -> np.ndarray:
    """Christoffel symbols ``Gamma_ij^k`` of the Levi-Civita connection at the point."""
    _check_invertible(jet)
    if jet.max_order < 1 and not jet.polynomial:
        raise MissingJetError("Christoffel symbols need first derivatives of g")
    return christoffel_series(jet.to_taylor(1)).value


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """Gram factor ``P`` with ``P.T @ g @ P = I`` (inverse transpose Cholesky)."""
    chol = np.linalg.cholesky(g)
    eye = np.broadcast_to(np.eye(g.shape[-1]), g.shape)
    return np.swapaxes(np.linalg.solve(chol, eye), -1, -2)


def to_frame(tensor: np.ndarray, frame: np.ndarray, rank: int) -> np.ndarray:
    """Express the last ``rank`` covariant slots of ``tensor`` in the orthonormal frame."""
    out = tensor
    for slot in range(rank):
        axis = out.ndim - rank + slot
        # one slot at a time keeps the batched work linear
        out = np.moveaxis(np.matmul(np.moveaxis(out, axis, -1)[..., None, :], frame.reshape(
            frame.shape[:-2] + (1,) * (rank - 1) + frame.shape[-2:]))[..., 0, :], -1, axis)
    return out


def scalar_curvature_series(g: Taylor) -> Taylor:
    ginv = g.matinv()
    riem = riemann_series(g)
    half = contract("...il,...ijkl->...jk", ginv, riem)
    return contract("...jk,...jk->...", ginv, half)


def laplacian_of_scalar(f: Taylor, g: Taylor) -> np.ndarray:
    """``f_;kk = g^ij (d_i d_j f - Gamma_ij^k d_k f)`` at the origin; ``f`` needs order 2."""
    gam = christoffel_series(g.truncate(1)).value
    ginv = np.linalg.inv(g.value)
    hess = f.derivative_tensor(2)
    grad = f.derivative_tensor(1)
    return np.einsum("...ij,...ij->...", ginv, hess - np.einsum("...ijk,...k->...ij", gam, grad))


def curvature(jet: MetricJet) -> CurvaturePack:
    """Curvature tensor and scalar invariants at the point.

    ``tau_lap`` (the Laplacian of the scalar curvature) is filled in when the
    jet reaches order 4 or is declared polynomial.
    """
    _check_invertible(jet)
    if jet.max_order < 2 and not jet.polynomial:
        raise MissingJetError("curvature needs second derivatives of g")
    riem = riemann_series(jet.to_taylor(2)).value
    frame = orthonormal_frame(jet.g)
    tau_lap = None
    if jet.batch_shape == () and (jet.max_order >= 4 or jet.polynomial):
        g4 = jet.to_taylor(4)
        tau_lap = float(laplacian_of_scalar(scalar_curvature_series(g4), g4))
    return CurvaturePack.from_riemann(to_frame(riem, frame, 4), frame=frame, tau_lap=tau_lap)


def covariant_derivative_series(t: Taylor, gamma: Taylor, rank: int) -> Taylor:
    """Levi-Civita derivative of a covariant tensor series; appends one trailing slot.

    ``(nabla T)_{i1..ir;k} = d_k T_{i1..ir} - sum_s Gamma_{k i_s}^l T_{..l..}``.
    Leading axes of ``t`` before the tensor slots are either fiber axes (with
    an unbatched ``gamma``) or batch axes matching those of ``gamma``.
    """
    out = t.grad()
    letters = "abcdefgh"
    slots = letters[:rank]
    batched = gamma.coeffs.ndim > 4
    for s in range(rank):
        replaced = slots[:s] + "z" + slots[s + 1:]
        spec = f"...{replaced},{'...' if batched else ''}y{slots[s]}z->...{slots}y"
        out = out - contract(spec, t, gamma)
    return out


def covariant_derivatives(theta: OneFormJet, jet: MetricJet, order: int):
    """Covariant derivatives ``Theta_{i;j}, Theta_{i;jk}, ...`` up to ``order``.

    Returns ``(derivs, codifferential)`` where ``derivs[k-1]`` has ``k+1``
    slots and ``codifferential = -g^ij Theta_{i;j}``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    gser = jet.to_taylor(order + 1)
    tser = theta.to_taylor(order)
    gamma = christoffel_series(gser)
    derivs = []
    current = tser
    for rank in range(1, order + 1):
        current = covariant_derivative_series(current, gamma, rank)
        derivs.append(current.value)
    ginv = np.linalg.inv(jet.g)
    codiff = -np.einsum("...ij,...ij->...", ginv, derivs[0])
    return derivs, codiff
