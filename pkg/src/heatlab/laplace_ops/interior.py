"""Interior heat invariants a_0, a_2, a_4 and the leading part of a_{2n}.

All densities are pointwise, per unit Riemannian measure.
"""

from __future__ import annotations

import math

import numpy as np

from ..exceptions import MissingJetError, UnsupportedConfigurationError
from ..tensor_core.jets import CurvaturePack
from ..tensor_core.taylor import Taylor
from .canonical import CanonicalData


def _real_if_close(value):
    value = complex(value)
    if abs(value.imag) <= 1e-12 * max(1.0, abs(value.real)):
        return value.real
    return value


def _norm(m: int) -> float:
    return (4 * math.pi) ** (-m / 2)


def a0(can: CanonicalData) -> float:
    return _norm(can.dim) * can.fiber_dim


def a2(can: CanonicalData, pack: CurvaturePack) -> float:
    f = can.fiber_dim
    return _real_if_close(_norm(can.dim) / 6 * np.trace(6 * can.E + float(pack.tau) * np.eye(f)))


def a4(can: CanonicalData, pack: CurvaturePack) -> float:
    if can.E_lap is None:
        raise MissingJetError("a4 needs E_;kk: supply operator jets to order 2 in B and 3 in A")
    if pack.tau_lap is None:
        raise MissingJetError("a4 needs tau_;kk: supply a metric jet of order 4")
    f = can.fiber_dim
    tau = float(pack.tau)
    E = can.E
    omega_sq = np.einsum("ik,jl,ijab,klba->", can.ginv, can.ginv, can.Omega, can.Omega)
    scalar = (12 * pack.tau_lap + 5 * tau**2 - 2 * float(pack.normRho2) + 2 * float(pack.normR2)) * f
    total = (60 * np.trace(can.E_lap) + 60 * tau * np.trace(E) + 180 * np.trace(E @ E)
             + scalar + 30 * omega_sq)
    return _real_if_close(_norm(can.dim) / 360 * total)


def _double_factorial_odd(n: int) -> int:
    return math.prod(range(1, 2 * n + 2, 2))


def _coordinate_laplacian(f: Taylor, ginv: np.ndarray) -> Taylor:
    out = None
    for i in range(f.dim):
        for j in range(f.dim):
            if ginv[i, j] == 0:
                continue
            term = f.d(i).d(j).scale(ginv[i, j])
            out = term if out is None else out + term
    return out


def a2n_leading(can: CanonicalData, n: int) -> float:
    """Leading term ``Tr{(8n+4)E + 2n tau}_{;k1k1...}`` of a_{2n} with its constant.

    Restricted to flat charts, where the iterated covariant Laplacian of the
    trace is the iterated coordinate Laplacian; lower-order terms are excluded.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not can.flat_chart:
        raise UnsupportedConfigurationError("a2n_leading is implemented for flat charts only")
    need = 2 * n - 2
    if can.E_order < need:
        raise MissingJetError(f"a_{2 * n} leading term needs E jets to order {need}, have {can.E_order}")
    series = can.E_series.truncate(need).map(lambda c: np.trace(c, axis1=-2, axis2=-1))
    series = series.scale(8 * n + 4)  # tau vanishes on a flat chart
    for _ in range(n - 1):
        series = _coordinate_laplacian(series, can.ginv)
    const = _norm(can.dim) / (2 ** (n + 1) * _double_factorial_odd(n))
    return _real_if_close(const * series.value)
