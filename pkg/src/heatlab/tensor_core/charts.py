"""Coordinate charts given declaratively, with exact symbolic jets.

Chart documents are JSON objects::

    {"dim": 2,
     "metric": "round_sphere_2" | [["1", "0"], ["0", "sin(x)**2"]],
     "theta": ["0.7*sin(x)", "0"],          # optional closed 1-form
     "coordinates": ["x", "y"]}             # optional

Builtin metric names: ``euclidean``, ``flat_torus``, ``round_sphere_2``,
``round_sphere_4``.  Sphere charts use hyperspherical angles
``(x, y, z, w) = (phi_1, ..., phi_m)`` with ``phi_m`` the azimuth.
"""

from __future__ import annotations

import itertools
from functools import cached_property

import numpy as np
import sympy as sp

from ..exceptions import SchemaError
from ..expressions import default_coordinates, lambdify, parse_expression
from .jets import MAX_METRIC_ORDER, MetricJet, OneFormJet

BUILTIN_METRICS = ("euclidean", "flat_torus", "round_sphere_2", "round_sphere_4")


def _sphere_metric(dim: int, coords) -> list[list[str]]:
    rows = [["0"] * dim for _ in range(dim)]
    factor = ""
    for k in range(dim):
        rows[k][k] = factor[:-1] if factor else "1"
        factor += f"sin({coords[k]})**2*"
    return rows


class Chart:
    """A coordinate chart with metric and optional 1-form given as expressions."""

    def __init__(self, dim: int, metric, theta=None, coordinates=None, name: str | None = None):
        if not isinstance(dim, int) or dim < 1:
            raise SchemaError("dim must be a positive integer")
        self.dim = dim
        self.coordinates = tuple(coordinates) if coordinates else default_coordinates(dim)
        if len(self.coordinates) != dim:
            raise SchemaError("coordinates must list one name per dimension")
        self.name = name
        self.polynomial = False
        if isinstance(metric, str):
            if metric not in BUILTIN_METRICS:
                raise SchemaError(f"unknown builtin metric {metric!r}")
            self.name = name or metric
            if metric in ("euclidean", "flat_torus"):
                metric = [["1" if i == j else "0" for j in range(dim)] for i in range(dim)]
                self.polynomial = True
            else:
                want = int(metric[-1])
                if want != dim:
                    raise SchemaError(f"{metric} needs dim {want}, got {dim}")
                metric = _sphere_metric(dim, self.coordinates)
            self.metric_source = self.name
        else:
            self.metric_source = metric
        if len(metric) != dim or any(len(row) != dim for row in metric):
            raise SchemaError("metric table must be dim x dim")
        g = sp.Matrix(dim, dim, lambda i, j: parse_expression(metric[i][j], self.coordinates))
        if g != g.T:
            raise SchemaError("metric table must be symmetric")
        self._g = g
        self.theta_source = theta
        self._theta = None
        if theta is not None:
            if len(theta) != dim:
                raise SchemaError("theta must have one component per dimension")
            self._theta = [parse_expression(t, self.coordinates) for t in theta]

    # JSON --------------------------------------------------------------
    @classmethod
    def from_dict(cls, doc: dict) -> "Chart":
        if not isinstance(doc, dict) or "dim" not in doc or "metric" not in doc:
            raise SchemaError("chart document needs 'dim' and 'metric'")
        unknown = set(doc) - {"dim", "metric", "theta", "coordinates", "name"}
        if unknown:
            raise SchemaError(f"unknown chart keys: {sorted(unknown)}")
        return cls(doc["dim"], doc["metric"], doc.get("theta"), doc.get("coordinates"), doc.get("name"))

    def to_dict(self) -> dict:
        doc = {"dim": self.dim, "metric": self.metric_source, "coordinates": list(self.coordinates)}
        if self.theta_source is not None:
            doc["theta"] = list(self.theta_source)
        return doc

    # jets --------------------------------------------------------------
    @cached_property
    def _symbols(self):
        return [sp.Symbol(c, real=True) for c in self.coordinates]

    def _derivative_fns(self, exprs, order: int):
        """Evaluators for all order-``order`` partials of each expression."""
        cache = self.__dict__.setdefault("_fn_cache", {})
        key = (id(exprs), order)
        if key not in cache:
            fns = {}
            for combo in itertools.combinations_with_replacement(range(self.dim), order):
                for n, e in enumerate(exprs):
                    d = sp.diff(e, *[self._symbols[i] for i in combo]) if combo else e
                    fns[(n, combo)] = lambdify(d, self.coordinates)
            cache[key] = fns
        return cache[key]

    def _jet_arrays(self, exprs, shape, points, order):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        args = [pts[:, k] for k in range(self.dim)]
        out = []
        for k in range(order + 1):
            fns = self._derivative_fns(exprs, k)
            vals = {key: fn(*args) for key, fn in fns.items()}
            arr = np.zeros((pts.shape[0], len(exprs)) + (self.dim,) * k,
                           dtype=np.result_type(*vals.values(), float))
            for (n, combo), v in vals.items():
                for perm in set(itertools.permutations(combo)):
                    arr[(slice(None), n) + perm] = v
            out.append(arr.reshape((pts.shape[0],) + shape + (self.dim,) * k))
        if np.ndim(points) == 1:
            out = [a[0] for a in out]
        return out

    @cached_property
    def _g_flat(self):
        return list(self._g)

    def metric_jet(self, points, order: int = 2) -> MetricJet:
        """Exact jet of the metric at one point (1-d input) or a batch (n x dim)."""
        if order > MAX_METRIC_ORDER:
            raise ValueError(f"metric jets are stored to order {MAX_METRIC_ORDER} at most")
        arrays = self._jet_arrays(self._g_flat, (self.dim, self.dim), points, order)
        return MetricJet(*arrays, polynomial=self.polynomial and order >= 1)

    def theta_jet(self, points, order: int = 1) -> OneFormJet:
        if self._theta is None:
            raise SchemaError("chart has no theta")
        arrays = self._jet_arrays(self._theta, (self.dim,), points, order)
        return OneFormJet(*arrays, closed=self.is_closed_theta())

    def is_closed_theta(self) -> bool:
        if self._theta is None:
            return True
        s = self._symbols
        return all(sp.simplify(sp.diff(self._theta[i], s[j]) - sp.diff(self._theta[j], s[i])) == 0
                   for i in range(self.dim) for j in range(i + 1, self.dim))

    def volume_density(self, points) -> np.ndarray:
        jet = self.metric_jet(points, order=0)
        return np.sqrt(np.linalg.det(jet.g))


def finite_difference_jet(metric_fn, x, h: float = 1e-4) -> MetricJet:
    """Second-order metric jet from an evaluator using 4th-order central stencils.

    Accuracy is roughly ``1e-12`` on first and ``1e-8`` on second derivatives
    for O(1) metrics, limited by cancellation at step ``h``.
    """
    x = np.asarray(x, dtype=float)
    m = x.size
    w1 = np.array([1, -8, 0, 8, -1]) / 12.0
    w2 = np.array([-1, 16, -30, 16, -1]) / 12.0
    offs = np.arange(-2, 3)
    g0 = np.asarray(metric_fn(x), dtype=float)
    e = np.eye(m)
    dg = np.zeros((m, m, m))
    d2g = np.zeros((m, m, m, m))
    for k in range(m):
        vals = [np.asarray(metric_fn(x + o * h * e[k]), dtype=float) for o in offs]
        dg[:, :, k] = sum(w * v for w, v in zip(w1, vals)) / h
        d2g[:, :, k, k] = sum(w * v for w, v in zip(w2, vals)) / h**2
    for k, l in itertools.combinations(range(m), 2):
        acc = np.zeros((m, m))
        for a, wa in zip(offs, w1):
            for b, wb in zip(offs, w1):
                if wa == 0 or wb == 0:
                    continue
                acc += wa * wb * np.asarray(metric_fn(x + h * (a * e[k] + b * e[l])), dtype=float)
        d2g[:, :, k, l] = d2g[:, :, l, k] = acc / h**2
    sym = lambda a: 0.5 * (a + np.swapaxes(a, 0, 1))
    return MetricJet(sym(g0), sym(dg), sym(d2g))
