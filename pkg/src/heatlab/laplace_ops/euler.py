"""Euler form and the Chern-Gauss-Bonnet boundary integrands Q_{k,m}."""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from ..tensor_core.jets import CurvaturePack


def permutation_sign(seq) -> int:
    """Sign of the permutation sorting ``seq``; 0 if an entry repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def wedge_pairing(I, J) -> int:
    """Inner product of ``e^I`` and ``e^J`` for orthonormal coframes.

    Zero unless both are arrangements of the same distinct indices, in which
    case it is the sign of the permutation taking ``I`` to ``J``.
    """
    if sorted(I) != sorted(J):
        return 0
    return permutation_sign(I) * permutation_sign(J)


@lru_cache(maxsize=None)
def _levi_civita(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        eps[perm] = permutation_sign(perm)
    return eps


@lru_cache(maxsize=None)
def _signed_perms(n: int):
    return [(perm, permutation_sign(perm)) for perm in itertools.permutations(range(n))]


def _pfaffian_sum(factors, n: int) -> np.ndarray:
    """``sum_{I,J} <e^I, e^J> prod_s F_s(I-slots, J-slots)`` over full index sets of size n.

    ``factors`` is a list of ``(array, rank)`` where ``array`` has ``2*rank``
    trailing axes: ``rank`` I-slots followed by ``rank`` J-slots.
    """
    letters = "abcdefghijklmnopqrstuvwxyz"
    acc = None
    for perm, sign in _signed_perms(n):
        operands = []
        specs = []
        pos = 0
        for arr, rank in factors:
            jslots = perm[pos:pos + rank]
            operands.append(arr[(Ellipsis,) + (slice(None),) * rank + tuple(jslots)])
            specs.append("..." + letters[pos:pos + rank])
            pos += rank
        term = np.einsum(",".join(specs) + "->..." + letters[:n], *operands)
        acc = sign * term if acc is None else acc + sign * term
    return np.einsum("..." + letters[:n] + "," + letters[:n] + "->...", acc, _levi_civita(n))


def euler_form(pack: CurvaturePack):
    """Euler form density; zero in odd dimension.

    Equals ``tau / (4 pi)`` for m = 2 and
    ``(tau^2 - 4|rho|^2 + |R|^2) / (32 pi^2)`` for m = 4.
    """
    m = pack.dim
    batch = np.shape(pack.tau)
    if m % 2:
        return np.zeros(batch) if batch else 0.0
    half = m // 2
    total = _pfaffian_sum([(pack.riemann, 2)] * half, m)
    value = (-1) ** half / (8**half * math.pi**half * math.factorial(half)) * total
    return value if batch else float(value)


def sphere_volume(n: int) -> float:
    """Volume of the unit n-sphere (``S^0`` has two points)."""
    if n == 0:
        return 2.0
    if n % 2:
        j = (n + 1) // 2
        return 2 * math.pi**j / math.factorial(j - 1)
    j = n // 2
    return math.factorial(j) * math.pi**j * 2 ** (2 * j + 1) / math.factorial(2 * j)


def boundary_Q(pack: CurvaturePack | None, L, k: int, m: int):
    """Boundary integrand ``Q_{k,m}`` for tangential frame indices ``0..m-2``.

    ``pack`` carries the ambient curvature in an orthonormal frame whose last
    index is the inward normal; it may be ``None`` when ``k = 0``.
    """
    if k < 0 or 2 * k > m - 1:
        raise ValueError(f"need 0 <= 2k <= m-1, got k={k}, m={m}")
    n = m - 1
    L = np.asarray(L, dtype=float)
    if L.shape[-2:] != (n, n):
        raise ValueError(f"second fundamental form must be {n} x {n}")
    if np.max(np.abs(L - np.swapaxes(L, -1, -2)), initial=0.0) > 1e-10:
        raise ValueError("second fundamental form must be symmetric")
    factors = []
    if k:
        if pack is None or pack.dim != m:
            raise ValueError("curvature of the ambient m-manifold is required for k >= 1")
        tangential = pack.riemann[..., :n, :n, :n, :n]
        factors += [(tangential, 2)] * k
    factors += [(L, 1)] * (n - 2 * k)
    if n == 0:
        numerator = 1.0
    else:
        numerator = _pfaffian_sum(factors, n)
    denom = (-8 * math.pi) ** k * math.factorial(k) * math.factorial(n - 2 * k) * sphere_volume(n - 2 * k)
    value = numerator / denom
    return float(value) if np.ndim(value) == 0 else value
