"""Twisted Dolbeault complex in complex dimension one.

Real/complex dictionary: ``z = x + i y``, ``d_z = (d_x - i d_y) / 2``,
``d_zbar = (d_x + i d_y) / 2``.  A twist ``Theta = theta dzbar`` is stored as
the complex 1-form with real-coordinate components ``(theta, -i theta)``, so
``Re(Theta) = Re(theta) dx + Im(theta) dy``.
"""

from __future__ import annotations

import math

import numpy as np

from ..exceptions import UnsupportedConfigurationError
from ..tensor_core.curvature import covariant_derivatives
from ..tensor_core.jets import CurvaturePack, MetricJet, OneFormJet
from ..tensor_core.taylor import Taylor
from .canonical import LaplaceCoefficients


def dolbeault_twist(theta_jets) -> OneFormJet:
    """1-form jet of ``theta dzbar`` from ``[theta, dtheta, ...]`` (dtheta over (x, y))."""
    jets = [np.asarray(j, dtype=complex) for j in theta_jets]
    # the component slot sits just before the k derivative slots of the k-th jet
    comps = [np.stack([j, -1j * j], axis=j.ndim - k) for k, j in enumerate(jets)]
    return OneFormJet(*comps)


def _check_type_01(theta: OneFormJet) -> None:
    if theta.dim != 2:
        raise UnsupportedConfigurationError("the Dolbeault density is implemented for m = 2 only")
    for k, jet in enumerate(theta.jets()):
        axis = jet.ndim - 1 - k
        first, second = np.take(jet, 0, axis=axis), np.take(jet, 1, axis=axis)
        if np.max(np.abs(second + 1j * first), initial=0.0) > 1e-12 * (1 + np.max(np.abs(jet))):
            raise ValueError("1-form is not of type (0,1): second component must be -i times the first")


def dolbeault_a2(pack: CurvaturePack, theta: OneFormJet, jet: MetricJet | None = None):
    """Supertraced a_2 density ``tau/(8 pi) - delta(Re Theta)/pi``.

    ``jet`` is the metric in the coordinates of ``theta``; omitted means flat.
    Batched jets give an array of densities.
    """
    if pack.dim != 2:
        raise UnsupportedConfigurationError("the Dolbeault density is implemented for m = 2 only")
    _check_type_01(theta)
    re_theta = OneFormJet(*[np.real(j) for j in theta.jets()])
    metric = MetricJet.euclidean(2) if jet is None else jet
    if jet is None and np.ndim(re_theta.theta) > 1:
        metric = _broadcast_jet(metric, re_theta.theta.shape[:-1])
    _, codiff = covariant_derivatives(re_theta, metric, 1)
    out = np.asarray(pack.tau) / (8 * math.pi) - np.asarray(codiff) / math.pi
    return float(out) if out.ndim == 0 else out


def _broadcast_jet(jet: MetricJet, batch) -> MetricJet:
    arrays = [np.broadcast_to(a, tuple(batch) + a.shape).copy() for a in jet.jets()]
    return MetricJet(*arrays, polynomial=jet.polynomial)


def dolbeault_coefficients(theta_jets) -> tuple[LaplaceCoefficients, LaplaceCoefficients]:
    """Laplace-type coefficients of ``A*A`` and ``AA*`` for ``A = 2(d_zbar + theta)`` on a flat torus.

    ``A*A = -4(d_z d_zbar + theta d_z - conj(theta) d_zbar - |theta|^2 + d_z theta)``
    and ``AA*`` has ``- d_zbar conj(theta)`` in place of ``d_z theta``.
    In real coordinates the first-order part is ``A^x = 2(theta - conj theta)``,
    ``A^y = -2i(theta + conj theta)``.
    """
    jets = [np.asarray(j, dtype=complex) for j in theta_jets]
    order = len(jets) - 1
    if order < 1:
        raise ValueError("need theta and at least its first derivatives")
    th = Taylor.from_derivatives(jets, 2, order)
    thc = Taylor(np.conj(th.coeffs), 2, order)
    d_z = (th.d(0) - th.d(1).scale(1j)).scale(0.5)
    d_zbar_conj = (thc.d(0) + thc.d(1).scale(1j)).scale(0.5)
    mod2 = th * thc
    ax = (th - thc).scale(2)
    ay = (th + thc).scale(-2j)
    a_series = Taylor(np.stack([ax.coeffs, ay.coeffs], axis=1)[:, :, None, None], 2, order)
    b00 = (mod2.truncate(order - 1).scale(-4) + d_z.scale(4)).map(lambda c: np.reshape(c, (1, 1)))
    b01 = (mod2.truncate(order - 1).scale(-4) - d_zbar_conj.scale(4)).map(lambda c: np.reshape(c, (1, 1)))
    a_jets = a_series.jets()
    return (LaplaceCoefficients(a_jets, b00.jets()), LaplaceCoefficients(a_jets, b01.jets()))
