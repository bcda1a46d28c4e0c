"""Model geometries with exact structure and quadrature, plus closed twist forms.

Coordinates follow :func:`heatlab.expressions.default_coordinates`.  Periodic
axes carry the trapezoid rule (spectrally exact for trigonometric
polynomials), the interval carries Gauss-Legendre, and round spheres use
hyperspherical angles with Gauss-Legendre on the polar angles and a
half-offset trapezoid rule on the azimuth, so no node sits on a pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import sympy as sp

from .exceptions import NumericalContractError, SchemaError, UnsupportedConfigurationError
from .expressions import default_coordinates, lambdify, parse_expression, trig_coefficients
from .tensor_core.charts import Chart

KINDS = ("point", "circle", "flatTorus", "interval", "product", "roundSphere", "complexTorus")
PERIODIC_NODES = 256
INTERVAL_NODES = 64
SPHERE_NODES = {2: (128, 256), 4: (24, 24, 24, 32)}

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class ModelManifold:
    """An immutable model geometry.

    ``circumferences`` are the periods of the periodic axes (circle, torus,
    complex torus); ``length`` is the interval length; ``radius`` the sphere
    radius.  ``nodes`` gives the quadrature node count per axis.
    """

    kind: str
    dim: int
    circumferences: tuple = ()
    length: float | None = None
    radius: float = 1.0
    factors: tuple = ()
    nodes: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown model kind {self.kind!r}")
        if self.kind == "product":
            if sum(f.dim for f in self.factors) != self.dim:
                raise SchemaError("product dim must equal the sum of factor dims")
        if self.kind in ("circle", "flatTorus", "complexTorus"):
            if len(self.circumferences) != self.dim or min(self.circumferences) <= 0:
                raise SchemaError("one positive circumference per axis is required")
        if self.kind == "interval" and not (self.length and self.length > 0):
            raise SchemaError("interval length must be positive")
        if self.kind == "roundSphere" and self.dim not in SPHERE_NODES:
            raise UnsupportedConfigurationError("round spheres are available in dimension 2 and 4")
        if self.kind != "product" and len(self.nodes) != self.dim:
            raise SchemaError("nodes must list one count per axis")

    # constructors --------------------------------------------------------
    @classmethod
    def point(cls) -> "ModelManifold":
        return cls("point", 0)

    @classmethod
    def circle(cls, circumference: float = TWO_PI, nodes: int = PERIODIC_NODES) -> "ModelManifold":
        return cls("circle", 1, (float(circumference),), nodes=(nodes,))

    @classmethod
    def flat_torus(cls, circumferences=(TWO_PI, TWO_PI), nodes: int = PERIODIC_NODES) -> "ModelManifold":
        circ = tuple(float(c) for c in circumferences)
        return cls("flatTorus", len(circ), circ, nodes=(nodes,) * len(circ))

    @classmethod
    def interval(cls, length: float = math.pi, nodes: int = INTERVAL_NODES) -> "ModelManifold":
        return cls("interval", 1, length=float(length), nodes=(nodes,))

    @classmethod
    def round_sphere(cls, dim: int = 2, radius: float = 1.0, nodes=None) -> "ModelManifold":
        if dim not in SPHERE_NODES:
            raise UnsupportedConfigurationError("round spheres are available in dimension 2 and 4")
        return cls("roundSphere", dim, radius=float(radius), nodes=tuple(nodes or SPHERE_NODES[dim]))

    @classmethod
    def complex_torus(cls, nodes: int = PERIODIC_NODES) -> "ModelManifold":
        """Square torus ``C / (Z + iZ)`` with coordinates ``z = x + i y``."""
        return cls("complexTorus", 2, (1.0, 1.0), nodes=(nodes, nodes))

    # structure -----------------------------------------------------------
    @property
    def coordinates(self) -> tuple[str, ...]:
        return default_coordinates(self.dim) if self.dim else ()

    def flat_factors(self) -> tuple["ModelManifold", ...]:
        if self.kind == "product":
            return tuple(g for f in self.factors for g in f.flat_factors())
        return (self,)

    @property
    def periods(self) -> tuple:
        """Period of each axis, ``None`` for non-periodic axes."""
        out = []
        for f in self.flat_factors():
            if f.kind in ("circle", "flatTorus", "complexTorus"):
                out += list(f.circumferences)
            else:
                out += [None] * f.dim
        return tuple(out)

    @property
    def has_boundary(self) -> bool:
        return any(f.kind == "interval" for f in self.flat_factors())

    @property
    def is_flat(self) -> bool:
        return all(f.kind != "roundSphere" for f in self.flat_factors())

    def boundary_points(self) -> list[tuple[float, int]]:
        """Boundary of an interval as ``(position, inward normal sign)``."""
        if self.kind != "interval":
            raise UnsupportedConfigurationError("boundary points are defined for the interval")
        return [(0.0, 1), (self.length, -1)]

    def _metric_matrix(self) -> sp.Matrix:
        if self.kind == "product":
            blocks = []
            offset = 0
            names = self.coordinates
            for f in self.factors:
                sub = f._metric_matrix()
                rename = {sp.Symbol(c, real=True): sp.Symbol(names[offset + k], real=True)
                          for k, c in enumerate(f.coordinates)}
                blocks.append(sub.xreplace(rename))
                offset += f.dim
            return sp.diag(*blocks) if blocks else sp.zeros(0, 0)
        if self.kind == "roundSphere":
            syms = [sp.Symbol(c, real=True) for c in self.coordinates]
            diag = []
            factor = sp.Integer(1)
            for s in syms:
                diag.append(sp.nsimplify(self.radius**2) * factor)
                factor = factor * sp.sin(s) ** 2
            return sp.diag(*diag)
        return sp.eye(self.dim)

    def chart(self, theta: "TwistForm | None" = None) -> Chart:
        """Coordinate chart of the model (and optional twist) in model coordinates."""
        if self.dim == 0:
            raise UnsupportedConfigurationError("a point has no chart")
        g = self._metric_matrix()
        table = [[sp.sstr(g[i, j]) for j in range(self.dim)] for i in range(self.dim)]
        th = None if theta is None else [sp.sstr(e) for e in theta.expressions]
        return Chart(self.dim, table, th, self.coordinates, name=self.kind)

    # quadrature ----------------------------------------------------------
    def _axis_rules(self):
        """Per-axis (nodes, weights) for tensor rules, or ``None`` for spheres."""
        rules = []
        for f in self.flat_factors():
            if f.kind in ("circle", "flatTorus", "complexTorus"):
                for period, n in zip(f.circumferences, f.nodes):
                    rules.append((np.arange(n) * period / n, np.full(n, period / n)))
            elif f.kind == "interval":
                x, w = np.polynomial.legendre.leggauss(f.nodes[0])
                rules.append(((x + 1) * f.length / 2, w * f.length / 2))
            elif f.kind == "roundSphere":
                for k, n in enumerate(f.nodes):
                    if k < f.dim - 1:
                        x, w = np.polynomial.legendre.leggauss(n)
                        rules.append(((x + 1) * math.pi / 2, w * math.pi / 2))
                    else:
                        rules.append(((np.arange(n) + 0.5) * TWO_PI / n, np.full(n, TWO_PI / n)))
        return rules

    def _density(self, points: np.ndarray) -> np.ndarray:
        dens = np.ones(points.shape[0])
        col = 0
        for f in self.flat_factors():
            if f.kind == "roundSphere":
                dens = dens * f.radius**f.dim
                for k in range(f.dim - 1):
                    dens = dens * np.sin(points[:, col + k]) ** (f.dim - 1 - k)
            col += f.dim
        return dens

    def quadrature(self, reduce_axes=()) -> tuple[np.ndarray, np.ndarray]:
        """Nodes ``(n, dim)`` and weights including the Riemannian density.

        Axes listed in ``reduce_axes`` are summed out in advance (their
        coordinate is set to the first node); valid for densities that do
        not depend on those coordinates.
        """
        if self.dim == 0:
            return np.zeros((1, 0)), np.ones(1)
        rules = self._axis_rules()
        for a in reduce_axes:
            x, w = rules[a]
            rules[a] = (x[:1], np.array([w.sum()]))
        mesh = np.meshgrid(*[r[0] for r in rules], indexing="ij")
        wmesh = np.meshgrid(*[r[1] for r in rules], indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=1)
        weights = np.prod(np.stack([w.ravel() for w in wmesh], axis=1), axis=1)
        return points, weights * self._density(points)

    @property
    def volume(self) -> float:
        total = 1.0
        for f in self.flat_factors():
            if f.kind in ("circle", "flatTorus", "complexTorus"):
                total *= math.prod(f.circumferences)
            elif f.kind == "interval":
                total *= f.length
            elif f.kind == "roundSphere":
                n = f.dim
                total *= 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2) * f.radius**n
        return total

    # JSON ------------------------------------------------------------------
    def to_dict(self) -> dict:
        doc = {"kind": self.kind, "dim": self.dim}
        if self.circumferences:
            doc["circumferences"] = list(self.circumferences)
        if self.length is not None:
            doc["length"] = self.length
        if self.kind == "roundSphere":
            doc["radius"] = self.radius
        if self.factors:
            doc["factors"] = [f.to_dict() for f in self.factors]
        if self.nodes:
            doc["nodes"] = list(self.nodes)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelManifold":
        if not isinstance(doc, dict) or "kind" not in doc:
            raise SchemaError("model document needs 'kind'")
        unknown = set(doc) - {"kind", "dim", "circumferences", "length", "radius", "factors", "nodes"}
        if unknown:
            raise SchemaError(f"unknown model keys: {sorted(unknown)}")
        kind = doc["kind"]
        if kind == "product":
            factors = tuple(cls.from_dict(f) for f in doc.get("factors", []))
            return cls("product", sum(f.dim for f in factors), factors=factors)
        defaults = {
            "point": cls.point,
            "circle": lambda: cls.circle(*doc.get("circumferences", [TWO_PI])),
            "flatTorus": lambda: cls.flat_torus(doc.get("circumferences", [TWO_PI, TWO_PI])),
            "interval": lambda: cls.interval(doc.get("length", math.pi)),
            "roundSphere": lambda: cls.round_sphere(doc.get("dim", 2), doc.get("radius", 1.0)),
            "complexTorus": cls.complex_torus,
        }
        if kind not in defaults:
            raise SchemaError(f"unknown model kind {kind!r}")
        model = defaults[kind]()
        if "dim" in doc and doc["dim"] != model.dim:
            raise SchemaError(f"{kind} has dim {model.dim}, document says {doc['dim']}")
        if "nodes" in doc:
            model = replace(model, nodes=tuple(int(n) for n in doc["nodes"]))
        return model


def integrate(model: ModelManifold, density: Callable, vectorized: bool = True,
              reduce_axes=(), chunk: int = 65536) -> float:
    """Quadrature of a pointwise density against the Riemannian measure.

    ``density`` maps an ``(n, dim)`` array of nodes to ``n`` values (or a
    single node to a value when ``vectorized`` is false).
    """
    points, weights = model.quadrature(reduce_axes)
    total = 0.0
    for start in range(0, len(weights), chunk):
        pts = points[start:start + chunk]
        if vectorized:
            vals = np.asarray(density(pts))
            vals = np.broadcast_to(vals, (len(pts),)) if vals.ndim == 0 else vals
        else:
            vals = np.array([density(p) for p in pts])
        if not np.all(np.isfinite(vals)):
            raise NumericalContractError("density is not finite at some quadrature nodes")
        total = total + np.dot(weights[start:start + chunk], vals)
    return float(np.real_if_close(total))


def product(m1: ModelManifold, m2: ModelManifold, _allow_boundary: bool = False) -> ModelManifold:
    """Riemannian product; circle-by-circle products collapse to a flat torus."""
    if not _allow_boundary and (m1.has_boundary or m2.has_boundary):
        raise UnsupportedConfigurationError("products are formed from boundaryless models only")
    if m1.dim == 0:
        return m2
    if m2.dim == 0:
        return m1
    flat = ("circle", "flatTorus")
    if m1.kind in flat and m2.kind in flat:
        circ = m1.circumferences + m2.circumferences
        return ModelManifold("flatTorus", len(circ), circ, nodes=m1.nodes + m2.nodes)
    factors = m1.flat_factors() + m2.flat_factors()
    return ModelManifold("product", m1.dim + m2.dim, factors=factors)


def restrict_by_circle(model: ModelManifold, circumference: float = TWO_PI) -> ModelManifold:
    """``model x S^1`` with the flat circle as the last coordinate."""
    return product(model, ModelManifold.circle(circumference), _allow_boundary=True)


def euler_characteristic(model: ModelManifold) -> float:
    """Quadrature of the Euler form over a closed model."""
    from .laplace_ops.euler import euler_form
    from .tensor_core.curvature import curvature

    if model.has_boundary:
        raise UnsupportedConfigurationError("the Euler form alone does not compute chi with boundary")
    if model.dim % 2 or model.is_flat:
        return 0.0
    chart = model.chart()
    free = set().union(*[e.free_symbols for e in chart._g])
    reduce_axes = [k for k, c in enumerate(model.coordinates) if sp.Symbol(c, real=True) not in free]

    def density(pts):
        return euler_form(curvature(chart.metric_jet(pts, order=2)))

    return integrate(model, density, reduce_axes=reduce_axes, chunk=8192)


# twist forms ---------------------------------------------------------------

@dataclass(frozen=True)
class TwistForm:
    """A 1-form ``Theta = sum_i Theta_i dx^i`` with trigonometric-polynomial components.

    ``periods`` are those of the underlying periodic model.  Fourier
    coefficients are read off on construction; the harmonic part is the
    constant mode of each component.
    """

    expressions: tuple
    periods: tuple
    coordinates: tuple = ()
    closed: bool = field(default=True)
    coefficients: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        dim = len(self.periods)
        coords = tuple(self.coordinates) or (default_coordinates(dim) if dim else ())
        object.__setattr__(self, "coordinates", coords)
        if len(self.expressions) != dim:
            raise SchemaError("twist needs one component per coordinate")
        exprs = tuple(parse_expression(e, coords) if not isinstance(e, sp.Basic) else e
                      for e in self.expressions)
        object.__setattr__(self, "expressions", exprs)
        syms = [sp.Symbol(c, real=True) for c in coords]
        closed = all(sp.simplify(sp.diff(exprs[j], syms[i]) - sp.diff(exprs[i], syms[j])) == 0
                     for i in range(dim) for j in range(i + 1, dim))
        if self.closed and not closed:
            raise SchemaError("twist is flagged closed but d(Theta) != 0")
        object.__setattr__(self, "closed", closed)
        if dim and self.coefficients is None:
            if any(p is None for p in self.periods):
                coeffs = {}
            else:
                coeffs = trig_coefficients([sp.sstr(e) for e in exprs], coords, self.periods)
            object.__setattr__(self, "coefficients", coeffs)
        elif self.coefficients is None:
            object.__setattr__(self, "coefficients", {})

    @classmethod
    def zero(cls, periods) -> "TwistForm":
        return cls(tuple("0" for _ in periods), tuple(periods))

    @classmethod
    def on(cls, model: ModelManifold, components, closed: bool = True) -> "TwistForm":
        if isinstance(components, (str, int, float, complex)):
            components = [components]
        return cls(tuple(components), model.periods, model.coordinates, closed)

    @property
    def dim(self) -> int:
        return len(self.periods)

    @property
    def harmonic(self) -> np.ndarray:
        """Constant part of each component (its cohomology class on a torus)."""
        zero = (0,) * self.dim
        return np.asarray(self.coefficients.get(zero, np.zeros(self.dim)))

    @property
    def bandwidth(self) -> tuple[int, ...]:
        if not self.coefficients:
            return (0,) * self.dim
        modes = np.array(list(self.coefficients))
        return tuple(int(b) for b in np.max(np.abs(modes), axis=0))

    @property
    def is_real(self) -> bool:
        return all(e.is_real is not False and sp.im(e) == 0 for e in self.expressions)

    def evaluate(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cols = [lambdify(e, self.coordinates)(*pts.T) for e in self.expressions]
        return np.stack(cols, axis=-1)

    def __neg__(self) -> "TwistForm":
        return TwistForm(tuple(-e for e in self.expressions), self.periods, self.coordinates)

    def __add__(self, other: "TwistForm") -> "TwistForm":
        if other.periods != self.periods:
            raise SchemaError("twists live on different models")
        return TwistForm(tuple(a + b for a, b in zip(self.expressions, other.expressions)),
                         self.periods, self.coordinates)

    def scale(self, c) -> "TwistForm":
        return TwistForm(tuple(sp.sympify(c) * e for e in self.expressions), self.periods, self.coordinates)

    def to_dict(self) -> dict:
        return {"components": [sp.sstr(e) for e in self.expressions], "periods": list(self.periods),
                "coordinates": list(self.coordinates)}

    @classmethod
    def from_dict(cls, doc: dict) -> "TwistForm":
        if "components" not in doc or "periods" not in doc:
            raise SchemaError("twist document needs 'components' and 'periods'")
        return cls(tuple(doc["components"]), tuple(doc["periods"]), tuple(doc.get("coordinates", ())))


def exact_twist(model: ModelManifold, h: str) -> TwistForm:
    """``dh`` for a periodic function ``h`` given as an expression."""
    syms = [sp.Symbol(c, real=True) for c in model.coordinates]
    expr = parse_expression(h, model.coordinates)
    return TwistForm(tuple(sp.diff(expr, s) for s in syms), model.periods, model.coordinates)


def product_twist(t1: TwistForm, t2: TwistForm) -> TwistForm:
    """``Theta_1(x^1) + Theta_2(x^2)`` on the product, in concatenated coordinates."""
    dim = t1.dim + t2.dim
    names = default_coordinates(dim)
    out = []
    for offset, t in ((0, t1), (t1.dim, t2)):
        rename = {sp.Symbol(c, real=True): sp.Symbol(names[offset + k], real=True)
                  for k, c in enumerate(t.coordinates)}
        out += [e.xreplace(rename) for e in t.expressions]
    return TwistForm(tuple(out), t1.periods + t2.periods, names)
