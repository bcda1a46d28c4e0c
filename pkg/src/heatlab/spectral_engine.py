"""Spectra, heat traces, supertraces, kernel dimensions and asymptotic fits."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
from scipy.sparse.csgraph import connected_components
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import AmbiguousKernelError, NumericalContractError, SchemaError
from .twisted_complexes import GradedOperatorSet

RELIABLE_FRACTION = 0.6
DISCARD_TOL = 1e-12
KERNEL_REL = 1e-8
GAP_RATIO = 100.0
HERMITIAN_TOL = 1e-8
T_MAX = 0.5
T_MAX_EVEN = 0.05  # even-only fits have fewer columns to absorb the tail
GRID_POINTS = 24
MAX_COND = 1e10


class WindowError(NumericalContractError):
    """Requested t lies below the reliability window; ``t_min`` is attached."""

    def __init__(self, message: str, t_min: float):
        super().__init__(message)
        self.t_min = t_min


@dataclass(frozen=True)
class SpectrumSet:
    """Sorted eigenvalues per degree with truncation bookkeeping.

    Only the lowest ``floor(0.6 * size)`` eigenvalues of each degree are
    treated as resolved; ``lambda_max[p]`` is the first discarded one.
    """

    eigenvalues: tuple
    signs: tuple
    labels: tuple = ()
    N: int | None = None
    reliable_fraction: float = RELIABLE_FRACTION
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        eigs = tuple(np.sort(np.asarray(e, dtype=float)) for e in self.eigenvalues)
        object.__setattr__(self, "eigenvalues", eigs)
        if len(self.signs) != len(eigs):
            raise SchemaError("one sign per degree is required")
        for e in eigs:
            if e.size and e[0] < -1e-9 * max(1.0, abs(e[-1])):
                raise NumericalContractError(f"negative eigenvalue {e[0]:.3e} in a nonnegative operator")

    @property
    def n_reliable(self) -> tuple[int, ...]:
        return tuple(int(math.floor(self.reliable_fraction * e.size)) for e in self.eigenvalues)

    @property
    def lambda_max(self) -> tuple[float, ...]:
        return tuple(float(e[k]) if k < e.size else math.inf for e, k in zip(self.eigenvalues, self.n_reliable))

    def reliable(self, p: int) -> np.ndarray:
        return self.eigenvalues[p][: self.n_reliable[p]]

    @property
    def t_min(self) -> float:
        """Smallest t at which every discarded block weighs less than 1e-12."""
        out = 0.0
        for e, k, lam in zip(self.eigenvalues, self.n_reliable, self.lambda_max):
            if math.isinf(lam):
                continue
            if lam <= 0:
                return math.inf
            out = max(out, (math.log(max(e.size - k, 1)) - math.log(DISCARD_TOL)) / lam)
        return out

    def clusters(self, p: int, tol: float = 1e-8) -> list[tuple[float, int]]:
        """Resolved eigenvalues grouped into ``(value, multiplicity)``."""
        vals = self.reliable(p)
        out: list[tuple[float, int]] = []
        for v in vals:
            if out and abs(v - out[-1][0]) <= tol * max(1.0, abs(v)):
                out[-1] = (out[-1][0], out[-1][1] + 1)
            else:
                out.append((float(v), 1))
        return out

    def to_dict(self) -> dict:
        return {"N": self.N, "labels": list(self.labels), "signs": list(self.signs),
                "lambda_max": [None if math.isinf(x) else x for x in self.lambda_max],
                "t_min": self.t_min, "eigenvalues": [e.tolist() for e in self.eigenvalues]}

    @classmethod
    def from_dict(cls, doc: dict) -> "SpectrumSet":
        return cls(tuple(doc["eigenvalues"]), tuple(doc["signs"]), tuple(doc.get("labels", ())), doc.get("N"))


def _block_eigenvalues(mat) -> np.ndarray:
    """Eigenvalues of a sparse Hermitian matrix, solving each connected block densely."""
    mat = sps.csr_matrix(mat)
    n = mat.shape[0]
    if n == 0:
        return np.zeros(0)
    pattern = abs(mat) > 0
    ncomp, labels = connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(ncomp + 1))
    out = np.empty(n)
    for c in range(ncomp):
        idx = order[bounds[c]:bounds[c + 1]]
        sub = mat[idx][:, idx]
        out[bounds[c]:bounds[c + 1]] = _dense_or_banded(sub)
    return np.sort(out)


def _dense_or_banded(sub: sps.csr_matrix) -> np.ndarray:
    n = sub.shape[0]
    if n == 1:
        return sub.toarray().real.ravel()
    coo = sub.tocoo()
    width = int(np.max(np.abs(coo.row - coo.col), initial=0))
    if 8 * (width + 1) < n:
        # upper banded storage: row u - k holds the k-th superdiagonal
        band = np.zeros((width + 1, n), dtype=sub.dtype)
        for k in range(width + 1):
            band[width - k, k:] = sub.diagonal(k)
        if not np.any(band.imag):
            band = band.real
        return sla.eig_banded(band, eigvals_only=True)
    block = sub.toarray()
    if not np.any(block.imag):
        block = block.real
    return sla.eigvalsh(block)


def eigensolve(ops: GradedOperatorSet, reliable_fraction: float = RELIABLE_FRACTION) -> SpectrumSet:
    """Full spectrum of every degree; rejects non-Hermitian input."""
    eigs = []
    for mat in ops.laplacians:
        mat = sps.csr_matrix(mat)
        scale = max(1.0, float(abs(mat).max()) if mat.nnz else 1.0)
        resid = abs(mat - mat.conj().T).max() if mat.nnz else 0.0
        if resid > HERMITIAN_TOL * scale:
            raise NumericalContractError(f"matrix is not Hermitian (residual {resid:.3e})")
        eigs.append(_block_eigenvalues(mat))
    return SpectrumSet(tuple(eigs), ops.signs, tuple(label for _, label in ops.degrees), ops.N,
                       reliable_fraction, meta={"kind": ops.kind})


def _check_window(spec: SpectrumSet, t: np.ndarray) -> None:
    if np.any(t <= 0):
        raise SchemaError("t must be positive")
    tmin = spec.t_min
    if np.min(t) < tmin:
        raise WindowError(f"t={np.min(t):.4g} is below the reliability window; use t >= {tmin:.4g}", tmin)


def heat_trace(spec: SpectrumSet, t, check: bool = True) -> np.ndarray:
    """``Tr exp(-t Delta^p)`` over resolved eigenvalues; shape ``(degrees,) + shape(t)``."""
    t = np.asarray(t, dtype=float)
    if check:
        _check_window(spec, np.atleast_1d(t))
    tt = np.atleast_1d(t)
    out = np.stack([np.exp(-np.outer(tt, spec.reliable(p))).sum(axis=1) for p in range(len(spec.signs))])
    return out.reshape((len(spec.signs),) + t.shape)


def supertrace(spec: SpectrumSet, t, check: bool = True):
    traces = heat_trace(spec, t, check)
    return np.tensordot(np.asarray(spec.signs, dtype=float), traces, axes=1)


def betti(spec: SpectrumSet, gap_ratio: float = GAP_RATIO) -> tuple[int, ...]:
    """Kernel dimension per degree; refuses when the spectral gap is not clear."""
    return kernel_report(spec, gap_ratio)["betti"]


def kernel_report(spec: SpectrumSet, gap_ratio: float = GAP_RATIO) -> dict:
    out, ratios = [], []
    for p, e in enumerate(spec.eigenvalues):
        kept = spec.reliable(p)
        tau = KERNEL_REL * max(1.0, float(kept[-1]) if kept.size else 1.0)
        k = int(np.sum(e < tau))
        above = e[k] / tau if k < e.size else math.inf
        below = tau / max(float(np.max(np.abs(e[:k]))), 1e-300) if k else math.inf
        ratio = min(above, below)
        ratios.append(ratio)
        if ratio < gap_ratio:
            raise AmbiguousKernelError(
                f"degree {p}: gap ratio {ratio:.3g} < {gap_ratio:g} around threshold {tau:.3g}")
        out.append(k)
    return {"betti": tuple(out), "gap_ratio": float(min(ratios)) if ratios else math.inf}


def index(spec: SpectrumSet, gap_ratio: float = GAP_RATIO) -> int:
    return int(sum(s * b for s, b in zip(spec.signs, betti(spec, gap_ratio))))


def spectral_distance(a, b, cutoff: float, rel_gap: float = 1e-6) -> tuple[float, int]:
    """Max deviation between the lowest eigenvalues of two sorted spectra.

    The comparison stops below ``cutoff``, moved down into the nearest gap
    of ``a`` so that no cluster is split.  Returns ``(distance, count)``.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    k = int(np.searchsorted(a, cutoff))
    while 0 < k < a.size and a[k] - a[k - 1] <= rel_gap * max(1.0, abs(a[k])):
        k -= 1
    if k > b.size:
        return math.inf, k
    return (float(np.max(np.abs(a[:k] - b[:k]))) if k else 0.0), k


# asymptotic fits ---------------------------------------------------------------

@dataclass(frozen=True)
class HeatFit:
    """Coefficients ``c_n`` of ``sum_n c_n t^{(n-m)/2}`` fitted on a geometric grid."""

    m: int
    orders: tuple
    coefficients: tuple
    residual: float
    t_grid: tuple
    truncation_error: tuple
    condition: float

    @property
    def powers(self) -> tuple[float, ...]:
        return tuple((n - self.m) / 2 for n in self.orders)

    def coefficient(self, n: int) -> float:
        return self.coefficients[self.orders.index(n)] if n in self.orders else 0.0

    def to_dict(self) -> dict:
        return {"m": self.m, "residual": self.residual, "condition": self.condition,
                "t_window": [self.t_grid[0], self.t_grid[-1]], "points": len(self.t_grid),
                "table": [{"n": n, "power": p, "c": c, "error": e}
                          for n, p, c, e in zip(self.orders, self.powers, self.coefficients,
                                                self.truncation_error)]}


def geometric_grid(t_lo: float, t_hi: float, points: int = GRID_POINTS) -> np.ndarray:
    return np.geomspace(t_lo, t_hi, points)


def _lstsq(t: np.ndarray, y: np.ndarray, m: int, orders) -> tuple[np.ndarray, float, float]:
    design = np.stack([t ** ((n - m) / 2) for n in orders], axis=1)
    norms = np.linalg.norm(design, axis=0)
    scaled = design / norms
    cond = float(np.linalg.cond(scaled))
    if not np.isfinite(cond) or cond > MAX_COND:
        raise NumericalContractError(
            f"design matrix condition {cond:.3g} exceeds {MAX_COND:g}: widen the t-window or lower K")
    sol, *_ = np.linalg.lstsq(scaled, y, rcond=None)
    coef = sol / norms
    resid = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    return coef, resid, cond


def fit_asymptotics(source, m: int, K: int | None = None, t_window=None, points: int = GRID_POINTS,
                    parity: str = "all", degree: int | None = None) -> HeatFit:
    """Least-squares fit of heat-trace asymptotics.

    ``source`` is a :class:`SpectrumSet` (supertrace, or the trace of
    ``degree``) or a callable ``t -> trace``.  ``parity="even"`` keeps only
    even ``n`` (closed manifolds have no odd terms).  The truncation-error
    estimate is the change of each coefficient when the fit is repeated on
    the lower 3/4 of the grid.
    """
    K = m + 4 if K is None else K
    if K > 5 and K > m + 4:
        raise SchemaError(f"K={K} exceeds the supported maximum")
    if parity not in ("all", "even"):
        raise SchemaError("parity must be 'all' or 'even'")
    if isinstance(source, SpectrumSet):
        lo_default = source.t_min
        if degree is None:
            fn: Callable = lambda t: supertrace(source, t)
        else:
            fn = lambda t: heat_trace(source, t)[degree]
    elif callable(source):
        lo_default = 1e-2
        fn = source
    else:
        raise SchemaError("source must be a SpectrumSet or a callable")
    hi_default = T_MAX_EVEN if parity == "even" else T_MAX
    lo, hi = t_window if t_window is not None else (max(lo_default, 1e-3), hi_default)
    if isinstance(source, SpectrumSet) and lo < source.t_min:
        raise WindowError(f"t-window starts below t_min={source.t_min:.4g}", source.t_min)
    if not 0 < lo < hi:
        raise SchemaError("t-window must satisfy 0 < t_lo < t_hi")
    t = geometric_grid(lo, hi, points)
    y = np.asarray(fn(t), dtype=float)
    orders = tuple(n for n in range(K + 1) if parity == "all" or n % 2 == 0)
    coef, resid, cond = _lstsq(t, y, m, orders)
    cut = max(len(orders) + 1, (3 * points) // 4)
    sub, _, _ = _lstsq(t[:cut], y[:cut], m, orders)
    err = tuple(float(abs(a - b)) for a, b in zip(coef, sub))
    return HeatFit(m, orders, tuple(float(c) for c in coef), resid, tuple(float(x) for x in t), err, cond)


# export ---------------------------------------------------------------------

def curves_csv(spec: SpectrumSet, t) -> str:
    """CSV with columns ``t, trace_0, ..., supertrace``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    traces = heat_trace(spec, t)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"trace_{p}" for p in range(len(spec.signs))] + ["supertrace"])
    sup = np.tensordot(np.asarray(spec.signs, dtype=float), traces, axes=1)
    for i, tv in enumerate(t):
        writer.writerow([repr(float(tv))] + [repr(float(x)) for x in traces[:, i]] + [repr(float(sup[i]))])
    return buf.getvalue()


# estimator API -----------------------------------------------------------------

class HeatTraceRegressor(RegressorMixin, BaseEstimator):
    """Fits ``y(t) ~ sum_n c_n t^{(n-m)/2}``; ``X`` is a column of t values."""

    def __init__(self, m: int = 1, K: int | None = None, parity: str = "all"):
        self.m = m
        self.K = K
        self.parity = parity

    def fit(self, X, y):
        X = check_array(X, ensure_min_features=1)
        t = X[:, 0]
        if np.any(t <= 0):
            raise ValueError("t values must be positive")
        y = np.asarray(y, dtype=float)
        K = self.m + 4 if self.K is None else self.K
        self.orders_ = tuple(n for n in range(K + 1) if self.parity == "all" or n % 2 == 0)
        coef, resid, cond = _lstsq(t, y, self.m, self.orders_)
        self.coef_ = coef
        self.residual_ = resid
        self.condition_ = cond
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        t = check_array(X)[:, 0]
        return np.stack([t ** ((n - self.m) / 2) for n in self.orders_], axis=1) @ self.coef_


class SpectralHeatTransformer(TransformerMixin, BaseEstimator):
    """``fit`` eigensolves a :class:`GradedOperatorSet`; ``transform`` maps t values to heat traces.

    Output columns are the per-degree traces followed by the supertrace.
    """

    def __init__(self, reliable_fraction: float = RELIABLE_FRACTION, check_window: bool = True):
        self.reliable_fraction = reliable_fraction
        self.check_window = check_window

    def fit(self, X, y=None):
        if not isinstance(X, GradedOperatorSet):
            raise TypeError("SpectralHeatTransformer.fit expects a GradedOperatorSet")
        self.spectrum_ = eigensolve(X, self.reliable_fraction)
        return self

    def transform(self, X):
        check_is_fitted(self, "spectrum_")
        t = check_array(X)[:, 0]
        traces = heat_trace(self.spectrum_, t, self.check_window)
        sup = np.tensordot(np.asarray(self.spectrum_.signs, dtype=float), traces, axes=1)
        return np.vstack([traces, sup[None, :]]).T
