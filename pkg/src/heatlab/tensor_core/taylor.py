"""Truncated multivariate Taylor series with tensor-valued coefficients.

A :class:`Taylor` holds the coefficients ``c_alpha`` of
``f(x) = sum_alpha c_alpha x**alpha`` for all multi-indices ``|alpha| <= order``
in ``dim`` variables.  Products are exact up to the truncation order, which is
what makes jets of Christoffel symbols, curvature and canonical endomorphisms
exact rather than finite-differenced.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from ..exceptions import DimensionMismatchError, MissingJetError


@lru_cache(maxsize=None)
def monomials(dim: int, order: int) -> tuple[tuple[int, ...], ...]:
    """Multi-indices of total degree <= order, graded then lexicographic."""
    out = []
    for deg in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(dim), deg):
            alpha = [0] * dim
            for i in combo:
                alpha[i] += 1
            out.append(tuple(alpha))
    return tuple(out)


@lru_cache(maxsize=None)
def _index(dim: int, order: int) -> dict:
    return {a: n for n, a in enumerate(monomials(dim, order))}


@lru_cache(maxsize=None)
def _product_table(dim: int, order: int):
    monos = monomials(dim, order)
    idx = _index(dim, order)
    p_list, q_list, r_list = [], [], []
    for p, a in enumerate(monos):
        for q, b in enumerate(monos):
            if sum(a) + sum(b) > order:
                continue
            c = tuple(x + y for x, y in zip(a, b))
            p_list.append(p)
            q_list.append(q)
            r_list.append(idx[c])
    r = np.array(r_list)
    scatter = np.zeros((len(monos), len(r_list)))
    scatter[r, np.arange(len(r_list))] = 1.0
    return np.array(p_list), np.array(q_list), scatter


def _alpha_to_indices(alpha):
    return tuple(i for i, a in enumerate(alpha) for _ in range(a))


def _factorial(alpha):
    return math.prod(math.factorial(a) for a in alpha)


class Taylor:
    """Truncated Taylor series; ``coeffs`` has shape ``(n_monomials, *shape)``."""

    __slots__ = ("coeffs", "dim", "order")

    def __init__(self, coeffs, dim: int, order: int):
        coeffs = np.asarray(coeffs)
        if coeffs.shape[0] != len(monomials(dim, order)):
            raise DimensionMismatchError("coefficient count does not match (dim, order)")
        self.coeffs = coeffs
        self.dim = dim
        self.order = order

    # construction -------------------------------------------------------
    @classmethod
    def from_derivatives(cls, jets, dim: int, order: int | None = None) -> "Taylor":
        """Build from ``[f, df, d2f, ...]``; ``d^k f`` carries k trailing derivative axes."""
        if order is None:
            order = len(jets) - 1
        if order > len(jets) - 1:
            raise MissingJetError(f"need derivatives to order {order}, have {len(jets) - 1}")
        base = np.asarray(jets[0])
        monos = monomials(dim, order)
        dtype = np.result_type(*[np.asarray(j).dtype for j in jets[: order + 1]], float)
        coeffs = np.zeros((len(monos),) + base.shape, dtype=dtype)
        for n, alpha in enumerate(monos):
            k = sum(alpha)
            arr = np.asarray(jets[k])
            coeffs[n] = arr[(Ellipsis,) + _alpha_to_indices(alpha)] / _factorial(alpha)
        return cls(coeffs, dim, order)

    @classmethod
    def constant(cls, value, dim: int, order: int) -> "Taylor":
        value = np.asarray(value)
        coeffs = np.zeros((len(monomials(dim, order)),) + value.shape, dtype=np.result_type(value, float))
        coeffs[0] = value
        return cls(coeffs, dim, order)

    @classmethod
    def variable(cls, i: int, dim: int, order: int) -> "Taylor":
        t = cls.constant(0.0, dim, order)
        if order >= 1:
            e = [0] * dim
            e[i] = 1
            t.coeffs[_index(dim, order)[tuple(e)]] = 1.0
        return t

    # basic queries ------------------------------------------------------
    @property
    def shape(self):
        return self.coeffs.shape[1:]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def truncate(self, order: int) -> "Taylor":
        if order > self.order:
            raise MissingJetError(f"cannot raise truncation order {self.order} to {order}")
        n = len(monomials(self.dim, order))
        return Taylor(self.coeffs[:n], self.dim, order)

    def derivative_tensor(self, k: int) -> np.ndarray:
        """All k-th partial derivatives at the origin, derivative axes trailing."""
        if k > self.order:
            raise MissingJetError(f"series of order {self.order} has no {k}-th derivatives")
        out = np.zeros(self.shape + (self.dim,) * k, dtype=self.coeffs.dtype)
        idx = _index(self.dim, self.order)
        for combo in itertools.product(range(self.dim), repeat=k):
            alpha = [0] * self.dim
            for i in combo:
                alpha[i] += 1
            alpha = tuple(alpha)
            out[(Ellipsis,) + combo] = self.coeffs[idx[alpha]] * _factorial(alpha)
        return out

    def jets(self) -> list[np.ndarray]:
        return [self.derivative_tensor(k) for k in range(self.order + 1)]

    # algebra ------------------------------------------------------------
    def _coerce(self, other) -> "Taylor":
        if isinstance(other, Taylor):
            if other.dim != self.dim:
                raise DimensionMismatchError("series in different numbers of variables")
            order = min(self.order, other.order)
            return other.truncate(order)
        return Taylor.constant(other, self.dim, self.order)

    def __add__(self, other):
        other = self._coerce(other)
        order = min(self.order, other.order)
        a = self.truncate(order)
        return Taylor(a.coeffs + other.coeffs, self.dim, order)

    __radd__ = __add__

    def __neg__(self):
        return Taylor(-self.coeffs, self.dim, self.order)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Taylor":
        return Taylor(self.coeffs * c, self.dim, self.order)

    def __mul__(self, c):
        if isinstance(c, Taylor):
            return contract("...,...->...", self, c)
        return self.scale(c)

    __rmul__ = __mul__

    def map(self, fn) -> "Taylor":
        """Apply a linear map acting on the tensor axes (e.g. a transpose)."""
        out = np.stack([fn(c) for c in self.coeffs])
        return Taylor(out, self.dim, self.order)

    def d(self, i: int) -> "Taylor":
        """Partial derivative in variable ``i``; lowers the order by one."""
        if self.order == 0:
            raise MissingJetError("cannot differentiate an order-0 series")
        new_order = self.order - 1
        idx = _index(self.dim, self.order)
        monos = monomials(self.dim, new_order)
        out = np.zeros((len(monos),) + self.shape, dtype=self.coeffs.dtype)
        for n, beta in enumerate(monos):
            up = list(beta)
            up[i] += 1
            out[n] = (beta[i] + 1) * self.coeffs[idx[tuple(up)]]
        return Taylor(out, self.dim, new_order)

    def grad(self) -> "Taylor":
        """Stack of partial derivatives as a new trailing axis."""
        parts = [self.d(i).coeffs for i in range(self.dim)]
        return Taylor(np.stack(parts, axis=-1), self.dim, self.order - 1)

    def matinv(self) -> "Taylor":
        """Inverse of a square-matrix-valued series (last two axes)."""
        g0 = self.coeffs[0]
        g0inv = np.linalg.inv(g0)
        nil = self - Taylor.constant(g0, self.dim, self.order)
        base = Taylor.constant(g0inv, self.dim, self.order)
        term = base
        total = base
        for _ in range(self.order):
            term = -contract("...ij,...jk->...ik", contract("...ij,...jk->...ik", base, nil), term)
            total = total + term
        return total


def contract(spec: str, a: Taylor, b: Taylor) -> Taylor:
    """Truncated Cauchy product combined with ``np.einsum(spec)`` on tensor axes."""
    if not isinstance(a, Taylor):
        a = b._coerce(a)
    if not isinstance(b, Taylor):
        b = a._coerce(b)
    if a.dim != b.dim:
        raise DimensionMismatchError("series in different numbers of variables")
    order = min(a.order, b.order)
    a = a.truncate(order)
    b = b.truncate(order)
    p, q, scatter = _product_table(a.dim, order)
    lhs, rhs = spec.split("->")
    sa, sb = lhs.split(",")
    prod = np.einsum(f"Z{sa},Z{sb}->Z{rhs}", a.coeffs[p], b.coeffs[q])
    flat = prod.reshape(prod.shape[0], -1)
    out = (scatter.astype(flat.dtype) @ flat).reshape((scatter.shape[0],) + prod.shape[1:])
    return Taylor(out, a.dim, order)
