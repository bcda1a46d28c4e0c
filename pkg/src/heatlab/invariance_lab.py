"""Jet variables, monomial enumeration and degree-counting kernel scans.

Indices are 1-based.  Interior variables are ``g_{ij/alpha}`` (``i <= j``,
``|alpha| >= 2``, order ``|alpha|``) and ``Theta_{i/beta}`` (order
``|beta| + 1``).  In boundary mode the last index ``m`` is the inward normal,
metric variables carry tangential ``i, j`` only, and the extra variables
``g_{ab/m}`` (order 1) encode the second fundamental form.

The interior restriction map kills anything touching index ``m``.  The
boundary restriction kills anything touching the tangential index 1 and
shifts the remaining indices down by one.

Kernel scans apply three monomial-level filters, in order:

* ``restriction``: the monomial must be killed by the restriction map;
* ``permutation``: every index in range must be touched (deg > 0), since an
  invariant polynomial is symmetric under permuting those coordinates;
* ``reflection``: every in-range degree must be even, since an invariant is
  unchanged under ``x_mu -> -x_mu``.

For boundary scans the permutation and reflection filters range over the
tangential indices only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from .exceptions import BudgetExceededError, SchemaError

MAX_ORDER = 6
MAX_DIM = 5

RULES = {
    "restriction": "restriction: deg of the killed index is 0, so r(A) != 0 and A is not in the kernel",
    "permutation": "permutation: some in-range index has deg 0, but symmetry forces every deg to be nonzero",
    "reflection": "reflection: some in-range index has odd deg, but sign changes force every deg to be even",
}


@dataclass(frozen=True, order=True)
class JetVariable:
    """``kind`` is ``"g"`` (metric), ``"L"`` (boundary ``g_{ab/m}``) or ``"theta"``."""

    kind: str
    i: int
    j: int = 0
    alpha: tuple = ()

    @property
    def order(self) -> int:
        if self.kind == "theta":
            return len(self.alpha) + 1
        return len(self.alpha)

    def deg(self, mu: int) -> int:
        d = self.alpha.count(mu) + (self.i == mu)
        return d + (self.j == mu) if self.kind != "theta" else d

    def shifted(self, delta: int) -> "JetVariable":
        return JetVariable(self.kind, self.i + delta, self.j + delta if self.j else 0,
                           tuple(a + delta for a in self.alpha))

    def max_index(self) -> int:
        return max((self.i, self.j) + self.alpha)

    def __str__(self) -> str:
        tail = "".join(map(str, self.alpha))
        if self.kind == "theta":
            return f"Theta_{{{self.i}/{tail}}}" if tail else f"Theta_{{{self.i}}}"
        return f"g_{{{self.i}{self.j}/{tail}}}"


def canonical_variable(kind: str, i: int, j: int, alpha) -> JetVariable:
    if kind != "theta" and i > j:
        i, j = j, i
    return JetVariable(kind, i, j, tuple(sorted(alpha)))


@dataclass(frozen=True)
class JetMonomial:
    variables: tuple
    m: int
    boundary: bool = False

    @cached_property
    def order(self) -> int:
        return sum(v.order for v in self.variables)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(sum(v.deg(mu) for v in self.variables) for mu in range(1, self.m + 1))

    @property
    def theta_count(self) -> int:
        return sum(v.kind == "theta" for v in self.variables)

    def __str__(self) -> str:
        return "*".join(map(str, self.variables)) or "1"

    def to_dict(self) -> dict:
        return {"monomial": str(self), "order": self.order, "deg": list(self.degrees)}


def _check_budget(m: int, n: int) -> None:
    if not 1 <= m <= MAX_DIM or not 0 <= n <= MAX_ORDER:
        raise BudgetExceededError(f"(m, n) = ({m}, {n}) outside the budget m <= {MAX_DIM}, n <= {MAX_ORDER}")


def jet_variables(m: int, max_order: int, with_theta: bool, boundary: bool) -> list[JetVariable]:
    """All canonical variables of order at most ``max_order``, sorted."""
    idx = range(1, m + 1)
    metric_idx = range(1, m) if boundary else idx
    out = []
    for i, j in itertools.combinations_with_replacement(metric_idx, 2):
        for k in range(2, max_order + 1):
            out += [JetVariable("g", i, j, a) for a in itertools.combinations_with_replacement(idx, k)]
        if boundary and max_order >= 1:
            out.append(JetVariable("L", i, j, (m,)))
    if with_theta:
        for i in idx:
            for k in range(0, max_order):
                out += [JetVariable("theta", i, 0, b) for b in itertools.combinations_with_replacement(idx, k)]
    return sorted(out)


def enumerate_monomials(m: int, n: int, with_theta: bool = True, boundary: bool = False) -> list[JetMonomial]:
    """All canonical monomials of total order exactly ``n``, in sorted order."""
    _check_budget(m, n)
    if boundary and m < 2:
        raise SchemaError("boundary mode needs m >= 2")
    pool = jet_variables(m, n, with_theta, boundary)
    out: list[JetMonomial] = []

    def grow(start: int, remaining: int, acc: list):
        if remaining == 0:
            out.append(JetMonomial(tuple(acc), m, boundary))
            return
        for k in range(start, len(pool)):
            v = pool[k]
            if v.order <= remaining:
                acc.append(v)
                grow(k, remaining - v.order, acc)
                acc.pop()

    grow(0, n, [])
    return out


def brute_force_monomials(m: int, n: int, with_theta: bool = True, boundary: bool = False) -> set:
    """Independent enumeration: raw index assignments, canonicalised and deduplicated."""
    _check_budget(m, n)
    idx = range(1, m + 1)
    metric_idx = list(range(1, m)) if boundary else list(idx)
    shapes = [("g", k) for k in range(2, n + 1)]
    if boundary:
        shapes.append(("L", 1))
    if with_theta:
        shapes += [("theta", k) for k in range(1, n + 1)]

    def raw(shape):
        kind, k = shape
        if kind == "theta":
            for i in idx:
                for beta in itertools.product(idx, repeat=k - 1):
                    yield canonical_variable("theta", i, 0, beta)
        elif kind == "L":
            for i, j in itertools.product(metric_idx, repeat=2):
                yield canonical_variable("L", i, j, (m,))
        else:
            for i, j in itertools.product(metric_idx, repeat=2):
                for alpha in itertools.product(idx, repeat=k):
                    yield canonical_variable("g", i, j, alpha)

    found = set()

    def partitions(remaining, start, acc):
        if remaining == 0:
            yield list(acc)
            return
        for s in range(start, len(shapes)):
            if shapes[s][1] <= remaining:
                acc.append(shapes[s])
                yield from partitions(remaining - shapes[s][1], s, acc)
                acc.pop()

    for combo in partitions(n, 0, []):
        pools = [sorted(set(raw(s))) for s in combo]
        for choice in itertools.product(*pools):
            found.add(tuple(sorted(choice)))
    return found


def restriction(mono: JetMonomial) -> JetMonomial | None:
    """Image under the restriction map, or ``None`` for zero."""
    if mono.boundary:
        if mono.degrees[0] > 0:
            return None
        return JetMonomial(tuple(sorted(v.shifted(-1) for v in mono.variables)), mono.m - 1, True)
    if mono.degrees[mono.m - 1] > 0:
        return None
    return JetMonomial(mono.variables, mono.m - 1, False)


def _in_range(mono: JetMonomial) -> range:
    return range(mono.m - 1) if mono.boundary else range(mono.m)


def eliminating_rule(mono: JetMonomial) -> str | None:
    """First filter that removes the monomial, or ``None`` if it survives."""
    if restriction(mono) is not None:
        return "restriction"
    degs = [mono.degrees[k] for k in _in_range(mono)]
    if any(d == 0 for d in degs):
        return "permutation"
    if any(d % 2 for d in degs):
        return "reflection"
    return None


def parity_candidates(m: int, n: int, with_theta: bool = True, boundary: bool = False) -> list[JetMonomial]:
    """Monomials whose in-range degrees are all even (candidates for invariant terms)."""
    return [mono for mono in enumerate_monomials(m, n, with_theta, boundary)
            if all(mono.degrees[k] % 2 == 0 for k in _in_range(mono))]


def equality_analysis(mono: JetMonomial) -> dict:
    """Degree-count chain ``2 (in-range dims) <= sum deg <= 2 n``.

    Equality at the top holds exactly when no Theta variable appears and every
    metric variable has two derivatives in in-range directions (in boundary
    mode ``g_{ab/m}`` variables also meet it).
    """
    in_range = list(_in_range(mono))
    total = sum(mono.degrees[k] for k in in_range)
    lower = 2 * len(in_range)
    upper = 2 * mono.order
    tangential_second = all(
        v.kind == "L" or (v.kind == "g" and len(v.alpha) == 2 and all(a - 1 in in_range for a in v.alpha))
        for v in mono.variables)
    return {"sum_deg": total, "lower": lower, "upper": upper, "equality": total == upper,
            "theta_free": mono.theta_count == 0,
            "second_derivative_only": tangential_second}


@dataclass(frozen=True)
class ScanResult:
    m: int
    n: int
    with_theta: bool
    boundary: bool
    rows: tuple

    @property
    def survivors(self) -> list[JetMonomial]:
        return [mono for mono, rule in self.rows if rule is None]

    def counts(self) -> dict:
        out = {"total": len(self.rows), "survivors": 0}
        for _, rule in self.rows:
            key = rule or "survivors"
            out[key] = out.get(key, 0) + 1
        return out

    def to_dict(self, full: bool = False) -> dict:
        doc = {"m": self.m, "n": self.n, "with_theta": self.with_theta, "boundary": self.boundary,
               "counts": self.counts(),
               "survivors": [dict(mono.to_dict(), **equality_analysis(mono)) for mono in self.survivors],
               "rules": RULES,
               "note": ("filters act monomial by monomial, so survivors are a superset of the kernel "
                        "generators; equality in the degree count pins their shape")}
        if full:
            doc["table"] = [dict(mono.to_dict(), verdict="survives" if rule is None else "eliminated",
                                 rule=rule) for mono, rule in self.rows]
        return doc

    def table(self) -> str:
        lines = [f"{'monomial':40s} {'order':>5s}  deg{'':10s} verdict"]
        for mono, rule in self.rows:
            lines.append(f"{str(mono):40s} {mono.order:5d}  {str(list(mono.degrees)):13s} "
                         f"{'survives' if rule is None else 'eliminated by ' + rule}")
        return "\n".join(lines)


def kernel_scan(m: int, n: int, with_theta: bool = True, boundary: bool = False) -> ScanResult:
    mons = enumerate_monomials(m, n, with_theta, boundary)
    return ScanResult(m, n, with_theta, boundary, tuple((mono, eliminating_rule(mono)) for mono in mons))
