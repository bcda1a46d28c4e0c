"""Coefficients of the twisted de Rham Laplacians on the flat circle.

With ``Theta = theta dx``, ``Delta^0 = -d^2 - theta' + theta^2`` and
``Delta^1 = -d^2 + theta' + theta^2``, so ``A = 0`` and
``B = +-theta' - theta^2``.
"""

from __future__ import annotations

import numpy as np

from ..tensor_core.curvature import curvature
from ..tensor_core.jets import MetricJet
from ..tensor_core.taylor import Taylor
from .canonical import LaplaceCoefficients, canonicalize
from .interior import a0, a2, a4


def twisted_circle_coefficients(theta_jets) -> tuple[LaplaceCoefficients, LaplaceCoefficients]:
    """``theta_jets = [theta, theta', theta'', ...]`` at a point (scalars)."""
    jets = [np.asarray(j, dtype=float).reshape((1,) * k) for k, j in enumerate(theta_jets)]
    order = len(jets) - 1
    th = Taylor.from_derivatives(jets, 1, order)
    sq = th.truncate(order - 1) * th.truncate(order - 1)
    out = []
    for sign in (1, -1):
        b = (th.d(0).scale(sign) - sq).map(lambda c: np.reshape(c, (1, 1)))
        zero_a = [np.zeros((1, 1, 1) + (1,) * k) for k in range(order + 1)]
        out.append(LaplaceCoefficients(zero_a, b.jets()))
    return out[0], out[1]


def twisted_circle_invariants(theta_jets) -> dict:
    """``a_0, a_2, a_4`` densities of both degrees and their supertraces."""
    jet = MetricJet.euclidean(1)
    pack = curvature(jet)
    table = {}
    for p, op in enumerate(twisted_circle_coefficients(theta_jets)):
        can = canonicalize(op, jet, e_order=2)
        table[p] = {"a0": a0(can), "a2": a2(can, pack), "a4": a4(can, pack)}
    table["super"] = {k: table[0][k] - table[1][k] for k in ("a0", "a2", "a4")}
    return table
