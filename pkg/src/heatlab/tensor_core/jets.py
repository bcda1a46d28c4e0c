"""Jet containers: metric jets, 1-form jets and the curvature pack."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DimensionMismatchError, MissingJetError, SingularMetricError
from .taylor import Taylor

MAX_METRIC_ORDER = 4
SYMMETRY_TOL = 1e-10


def _sym_residual(a: np.ndarray, ax1: int, ax2: int) -> float:
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - np.swapaxes(a, ax1, ax2))))


@dataclass(frozen=True)
class MetricJet:
    """Metric components and partial derivatives at a point.

    ``dg[..., i, j, k]`` is ``d_k g_ij``; higher jets append derivative axes
    the same way.  Leading batch axes are allowed, which lets quadrature
    evaluate many points at once.  ``polynomial=True`` declares that all
    derivatives above the stored order vanish identically (flat charts).
    """

    g: np.ndarray
    dg: np.ndarray | None = None
    d2g: np.ndarray | None = None
    d3g: np.ndarray | None = None
    d4g: np.ndarray | None = None
    polynomial: bool = False

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        object.__setattr__(self, "g", g)
        if g.ndim < 2 or g.shape[-1] != g.shape[-2]:
            raise DimensionMismatchError("g must be a square matrix")
        m = g.shape[-1]
        for k, name in enumerate(("dg", "d2g", "d3g", "d4g"), start=1):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            if arr.shape[-(k + 2):] != (m,) * (k + 2):
                raise DimensionMismatchError(f"{name} must end in {(m,) * (k + 2)}")
            object.__setattr__(self, name, arr)
        if _sym_residual(g, -1, -2) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(g)))):
            raise SingularMetricError("metric is not symmetric")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError as exc:
            raise SingularMetricError("metric is not positive definite") from exc
        if self.dg is not None and _sym_residual(self.dg, -3, -2) > SYMMETRY_TOL * (1 + np.max(np.abs(self.dg))):
            raise ValueError("dg must be symmetric in its first two slots")
        if self.d2g is not None:
            scale = 1 + np.max(np.abs(self.d2g))
            if (_sym_residual(self.d2g, -4, -3) > SYMMETRY_TOL * scale
                    or _sym_residual(self.d2g, -2, -1) > SYMMETRY_TOL * scale):
                raise ValueError("d2g must be symmetric in its first two and last two slots")

    @property
    def dim(self) -> int:
        return self.g.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.g.shape[:-2]

    @property
    def max_order(self) -> int:
        order = 0
        for name in ("dg", "d2g", "d3g", "d4g"):
            if getattr(self, name) is None:
                break
            order += 1
        return order

    def jets(self) -> list[np.ndarray]:
        return [self.g, self.dg, self.d2g, self.d3g, self.d4g][: self.max_order + 1]

    def is_flat_chart(self) -> bool:
        """Constant metric in this chart (all stored derivatives zero, none missing)."""
        return self.polynomial and all(not np.any(j) for j in self.jets()[1:])

    def to_taylor(self, order: int) -> Taylor:
        jets = self.jets()
        if order > len(jets) - 1:
            if not self.polynomial:
                raise MissingJetError(
                    f"metric jet carries derivatives to order {len(jets) - 1}, need {order}")
            m = self.dim
            while len(jets) <= order:
                k = len(jets)
                jets.append(np.zeros(self.batch_shape + (m,) * (k + 2)))
        return Taylor.from_derivatives(jets, self.dim, order)

    @classmethod
    def euclidean(cls, dim: int) -> "MetricJet":
        z = [np.zeros((dim,) * k) for k in range(3, 7)]
        return cls(np.eye(dim), *z, polynomial=True)

    @classmethod
    def from_taylor(cls, series: Taylor, polynomial: bool = False) -> "MetricJet":
        if series.order > MAX_METRIC_ORDER:
            raise ValueError(f"metric jets are stored to order {MAX_METRIC_ORDER} at most")
        return cls(*series.jets(), polynomial=polynomial)

    def linear_change(self, a: np.ndarray) -> "MetricJet":
        """Pull back through the linear coordinate change ``x = a @ y``."""
        a = np.asarray(a, dtype=float)
        out = []
        for k, jet in enumerate(self.jets()):
            arr = jet
            for axis in range(arr.ndim - k - 2, arr.ndim):
                arr = np.moveaxis(np.tensordot(arr, a, axes=([axis], [0])), -1, axis)
            out.append(arr)
        return MetricJet(*out, polynomial=self.polynomial)


@dataclass(frozen=True)
class OneFormJet:
    """Components of a 1-form and their partial derivatives at a point.

    ``dtheta[..., i, j]`` is ``d_j Theta_i``.  Complex values are allowed for
    the Dolbeault twist.  When ``closed`` is set, the closedness
    ``d_j Theta_i = d_i Theta_j`` is checked on construction.
    """

    theta: np.ndarray
    dtheta: np.ndarray | None = None
    d2theta: np.ndarray | None = None
    d3theta: np.ndarray | None = None
    closed: bool = False
    polynomial: bool = False

    def __post_init__(self):
        theta = np.asarray(self.theta)
        object.__setattr__(self, "theta", theta if np.iscomplexobj(theta) else theta.astype(float))
        m = theta.shape[-1]
        for k, name in enumerate(("dtheta", "d2theta", "d3theta"), start=1):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr)
            if arr.shape[-(k + 1):] != (m,) * (k + 1):
                raise DimensionMismatchError(f"{name} must end in {(m,) * (k + 1)}")
            object.__setattr__(self, name, arr)
        if self.closed and self.dtheta is not None:
            res = _sym_residual(self.dtheta, -1, -2)
            if res > 1e-9 * (1 + float(np.max(np.abs(self.dtheta)))):
                raise ValueError(f"1-form flagged closed but d_j Theta_i - d_i Theta_j = {res:.3g}")

    @property
    def dim(self) -> int:
        return self.theta.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.theta.shape[:-1]

    def jets(self) -> list[np.ndarray]:
        out = [self.theta]
        for name in ("dtheta", "d2theta", "d3theta"):
            arr = getattr(self, name)
            if arr is None:
                break
            out.append(arr)
        return out

    def to_taylor(self, order: int) -> Taylor:
        jets = self.jets()
        if order > len(jets) - 1:
            if not self.polynomial:
                raise MissingJetError(
                    f"1-form jet carries derivatives to order {len(jets) - 1}, need {order}")
            while len(jets) <= order:
                jets.append(np.zeros(self.batch_shape + (self.dim,) * (len(jets) + 1)))
        return Taylor.from_derivatives(jets, self.dim, order)

    @classmethod
    def constant(cls, theta) -> "OneFormJet":
        theta = np.asarray(theta)
        m = theta.shape[-1]
        z = [np.zeros(theta.shape + (m,) * k, dtype=theta.dtype) for k in range(1, 4)]
        return cls(theta, *z, closed=True, polynomial=True)


@dataclass(frozen=True)
class CurvaturePack:
    """Curvature at a point in an orthonormal frame.

    ``riemann[..., i, j, k, l]`` follows the convention ``R_1221 = +1`` on the
    unit 2-sphere; ``ricci[i, j] = R_ikkj`` and ``tau = R_ijji``.
    ``frame`` maps orthonormal-frame indices to coordinate indices
    (``frame.T @ g @ frame = I``).  ``tau_lap`` is the scalar ``tau_;kk``
    when the metric jet was rich enough to compute it.
    """

    riemann: np.ndarray
    ricci: np.ndarray
    tau: np.ndarray | float
    normRho2: np.ndarray | float
    normR2: np.ndarray | float
    frame: np.ndarray | None = field(default=None, repr=False)
    tau_lap: float | None = None

    @property
    def dim(self) -> int:
        return self.riemann.shape[-1]

    @classmethod
    def from_riemann(cls, riemann, frame=None, tau_lap=None) -> "CurvaturePack":
        """Build from orthonormal-frame components of an algebraic curvature tensor."""
        riemann = np.asarray(riemann, dtype=float)
        ricci = np.einsum("...ikkj->...ij", riemann)
        tau = np.einsum("...ii->...", ricci)
        return cls(
            riemann=riemann,
            ricci=ricci,
            tau=tau,
            normRho2=np.einsum("...ij,...ij->...", ricci, ricci),
            normR2=np.einsum("...ijkl,...ijkl->...", riemann, riemann),
            frame=frame,
            tau_lap=tau_lap,
        )
