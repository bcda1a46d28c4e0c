"""Galerkin assembly of twisted de Rham and Dolbeault complexes on flat models.

Periodic models use the orthonormal Fourier basis ``e_k = exp(2 pi i k.x / L) / sqrt(vol)``
with ``|k_j| <= N`` on every axis, ordered lexicographically (first axis
outermost).  p-forms are laid out component-major over the sorted index
tuples, so 1-forms on the 2-torus are ``(dx, dy)``.

Laplacians are exact compressions ``P_N (delta d + d delta) P_N``: the twisted
differential maps the box ``N`` into the box ``N + b`` (``b`` the twist
bandwidth), so ``Delta = D^H D + D' D'^H`` with ``D`` from box ``N`` to box
``N + b`` and ``D'`` from box ``N + b`` to box ``N``.  This keeps every
matrix Hermitian positive semidefinite by construction.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .exceptions import AliasingError, SchemaError, UnsupportedConfigurationError
from .model_manifolds import ModelManifold, TwistForm

PRODUCT_SIZE_CAP = 40000
BUNDLE_MAGIC = "heatlab-matrix-bundle"


@dataclass(frozen=True)
class BoundaryConditionSpec:
    """Relative (Dirichlet on functions) or absolute (Neumann on functions)."""

    flavor: str = "relative"

    def __post_init__(self):
        if self.flavor not in ("relative", "absolute"):
            raise SchemaError("boundary condition flavor must be 'relative' or 'absolute'")

    @property
    def pattern(self) -> tuple[str, str]:
        """Scalar condition on (functions, 1-forms) of the interval."""
        return ("dirichlet", "neumann") if self.flavor == "relative" else ("neumann", "dirichlet")


@dataclass(frozen=True)
class GradedOperatorSet:
    """Per-degree Laplacians and chain maps in an orthonormal truncated basis.

    ``laplacians[p]`` is Hermitian PSD (sparse); ``chain_maps[p]`` maps degree
    ``p`` to ``p + 1``.  ``resolved[p]`` flags basis vectors on which the
    truncated chain maps agree with the true operators (used for the chain
    property and other edge-sensitive checks).
    """

    degrees: tuple
    laplacians: tuple
    chain_maps: tuple
    N: int
    resolved: tuple
    kind: str = "deRham"
    meta: dict = field(default_factory=dict)

    @property
    def signs(self) -> tuple[int, ...]:
        return tuple((-1) ** p for p, _ in self.degrees)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(m.shape[0] for m in self.laplacians)

    def dense(self, p: int) -> np.ndarray:
        return np.asarray(self.laplacians[p].toarray())

    def chain_defect(self) -> float:
        """``max |d^{p+1} d^p|`` on resolved columns."""
        worst = 0.0
        for p in range(len(self.chain_maps) - 1):
            prod = (self.chain_maps[p + 1] @ self.chain_maps[p]).tocsc()
            cols = np.flatnonzero(self.resolved[p])
            if cols.size and prod.nnz:
                worst = max(worst, float(np.max(np.abs(prod[:, cols].toarray()), initial=0.0)))
        return worst

    def adjoint_defect(self) -> float:
        """Hermitian symmetry residual of the Laplacians."""
        return max(float(abs(m - m.conj().T).max()) if m.nnz else 0.0 for m in self.laplacians)


# Fourier boxes -------------------------------------------------------------

def box_modes(R: int, m: int) -> np.ndarray:
    """All integer vectors with ``|k_j| <= R``, lexicographic."""
    axes = [np.arange(-R, R + 1)] * m
    return np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1).reshape(-1, m)


def _box_index(k: np.ndarray, R: int) -> np.ndarray:
    m = k.shape[1]
    return np.ravel_multi_index(tuple((k + R).T), (2 * R + 1,) * m)


def _multiplier(coeffs: dict, m: int, R_out: int, R_in: int) -> sps.csr_matrix:
    """Matrix of multiplication by ``sum_q c_q e^{2 pi i q.x/L}`` between boxes."""
    modes_in = box_modes(R_in, m)
    n_out = (2 * R_out + 1) ** m
    rows, cols, vals = [], [], []
    for q, c in coeffs.items():
        if c == 0:
            continue
        target = modes_in + np.asarray(q)
        ok = np.all(np.abs(target) <= R_out, axis=1)
        rows.append(_box_index(target[ok], R_out))
        cols.append(np.flatnonzero(ok))
        vals.append(np.full(ok.sum(), c, dtype=complex))
    if not rows:
        return sps.csr_matrix((n_out, len(modes_in)), dtype=complex)
    return sps.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n_out, len(modes_in)))


def _derivative(axis: int, period: float, m: int, R_out: int, R_in: int) -> sps.csr_matrix:
    modes_in = box_modes(R_in, m)
    ok = np.all(np.abs(modes_in) <= R_out, axis=1)
    diag = 2j * math.pi * modes_in[ok, axis] / period
    return sps.csr_matrix((diag, (_box_index(modes_in[ok], R_out), np.flatnonzero(ok))),
                          shape=((2 * R_out + 1) ** m, len(modes_in)))


def _components(m: int, p: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(m), p))


def _twisted_d(p: int, m: int, periods, comp_coeffs, R_out: int, R_in: int) -> sps.csr_matrix:
    """``d_Theta = d + Theta wedge`` from p-forms on box ``R_in`` to (p+1)-forms on box ``R_out``."""
    src = _components(m, p)
    dst = {c: n for n, c in enumerate(_components(m, p + 1))}
    blocks = [[None] * len(src) for _ in dst]
    factors = [_derivative(j, periods[j], m, R_out, R_in) + _multiplier(comp_coeffs[j], m, R_out, R_in)
               for j in range(m)]
    for s, I in enumerate(src):
        for j in range(m):
            if j in I:
                continue
            sign = (-1) ** sum(1 for i in I if i < j)
            r = dst[tuple(sorted(I + (j,)))]
            blocks[r][s] = factors[j] * sign
    n_out, n_in = (2 * R_out + 1) ** m, (2 * R_in + 1) ** m
    for r in range(len(dst)):
        for s in range(len(src)):
            if blocks[r][s] is None:
                blocks[r][s] = sps.csr_matrix((n_out, n_in), dtype=complex)
    return sps.bmat(blocks, format="csr")


def _split_coefficients(theta: TwistForm) -> list[dict]:
    out = [dict() for _ in range(theta.dim)]
    for mode, vals in theta.coefficients.items():
        for j in range(theta.dim):
            if abs(vals[j]) > 0:
                out[j][tuple(mode)] = complex(vals[j])
    return out


def _assemble_periodic(model: ModelManifold, theta: TwistForm | None, N: int) -> GradedOperatorSet:
    m = model.dim
    periods = model.periods
    if any(p is None for p in periods):
        raise UnsupportedConfigurationError("Fourier assembly needs a periodic model")
    theta = theta if theta is not None else TwistForm.zero(periods)
    if theta.dim != m or tuple(theta.periods) != tuple(periods):
        raise SchemaError("twist does not live on this model")
    if not theta.closed:
        raise SchemaError("twist must be closed: d_Theta^2 = dTheta wedge")
    b = max(theta.bandwidth, default=0)
    if N < 1 or N < b:
        raise AliasingError(f"truncation N={N} is below the twist bandwidth {b}")
    coeffs = _split_coefficients(theta)
    out_big = [_twisted_d(p, m, periods, coeffs, N + b, N) for p in range(m)]
    in_big = [_twisted_d(p, m, periods, coeffs, N, N + b) for p in range(m)]
    chain = [_twisted_d(p, m, periods, coeffs, N, N) for p in range(m)]
    lap = []
    for p in range(m + 1):
        term = sps.csr_matrix((math.comb(m, p) * (2 * N + 1) ** m,) * 2, dtype=complex)
        if p < m:
            term = term + (out_big[p].conj().T @ out_big[p])
        if p > 0:
            term = term + (in_big[p - 1] @ in_big[p - 1].conj().T)
        lap.append(sps.csr_matrix(term))
    inner = np.all(np.abs(box_modes(N, m)) <= N - b, axis=1)
    resolved = tuple(np.tile(inner, math.comb(m, p)) for p in range(m + 1))
    names = model.coordinates
    degrees = tuple((p, ",".join("".join("d" + names[i] for i in I) or "1" for I in _components(m, p)))
                    for p in range(m + 1))
    return GradedOperatorSet(
        degrees=degrees, laplacians=tuple(lap), chain_maps=tuple(chain), N=N, resolved=resolved,
        meta={"model": model.to_dict(), "twist": theta.to_dict(), "bandwidth": b,
              "basis": "fourier", "components": [[list(c) for c in _components(m, p)] for p in range(m + 1)]},
    )


def assemble_circle(theta: TwistForm | None, N: int, circumference: float = 2 * math.pi) -> GradedOperatorSet:
    """``Delta^0 = -d^2 - theta' + theta^2`` and ``Delta^1 = -d^2 + theta' + theta^2`` on S^1."""
    return _assemble_periodic(ModelManifold.circle(circumference), theta, N)


def assemble_torus(theta: TwistForm | None, N: int, circumferences=(2 * math.pi, 2 * math.pi)) -> GradedOperatorSet:
    """Twisted de Rham complex of the flat m-torus, ``m = len(circumferences)``."""
    return _assemble_periodic(ModelManifold.flat_torus(circumferences), theta, N)


def assemble_interval(bc: BoundaryConditionSpec, N: int, length: float = math.pi,
                      theta: TwistForm | None = None) -> GradedOperatorSet:
    """Untwisted de Rham complex of ``[0, L]`` in the sine/cosine eigenbases.

    Dirichlet blocks use ``sin(n pi x / L)``, ``n = 1..N``; Neumann blocks use
    ``cos(n pi x / L)``, ``n = 0..N``, so ``d`` pairs mode ``n`` with mode ``n``.
    """
    if theta is not None and any(str(e) != "0" for e in theta.expressions):
        raise UnsupportedConfigurationError("twisted complexes on the interval are not supported")
    if N < 1:
        raise SchemaError("N must be at least 1")
    n_sin = np.arange(1, N + 1)
    n_cos = np.arange(0, N + 1)
    k = math.pi / length
    pattern = bc.pattern
    ns = [n_sin if c == "dirichlet" else n_cos for c in pattern]
    lap = tuple(sps.diags((k * n) ** 2.0, format="csr").astype(complex) for n in ns)
    if bc.flavor == "relative":
        # d sin(n k x) = n k cos(n k x) dx, normalised bases map row n <- column n
        chain = sps.csr_matrix((k * n_sin, (n_sin, n_sin - 1)), shape=(N + 1, N))
    else:
        # d cos(n k x) = -n k sin(n k x) dx; the constant mode is closed
        chain = sps.csr_matrix((-k * n_sin, (n_sin - 1, n_sin)), shape=(N, N + 1))
    resolved = tuple(np.ones(len(n), dtype=bool) for n in ns)
    return GradedOperatorSet(
        degrees=((0, "1"), (1, "dx")), laplacians=lap, chain_maps=(chain.astype(complex),), N=N,
        resolved=resolved,
        meta={"model": ModelManifold.interval(length).to_dict(), "boundary": bc.flavor,
              "basis": [f"{c}" for c in pattern], "modes": [[int(n[0]), int(n[-1])] for n in ns]},
    )


def assemble_dolbeault_torus(theta, N: int) -> GradedOperatorSet:
    """``A = 2(d_zbar + theta)`` on the square torus ``C / (Z + iZ)``.

    ``theta`` is a complex trigonometric polynomial in ``(x, y)`` (string,
    number or :class:`TwistForm` with one component, period 1).  Blocks are
    ``A^*A`` on (0,0)-forms and ``AA^*`` on (0,1)-forms.
    """
    model = ModelManifold.complex_torus()
    if isinstance(theta, TwistForm):
        expr = theta.expressions[0]
    else:
        expr = 0 if theta is None else theta
    from .expressions import trig_coefficients

    coeffs = trig_coefficients(str(expr), model.coordinates, model.periods)
    b = max((max(abs(k) for k in q) for q in coeffs), default=0)
    if N < 1 or N < b:
        raise AliasingError(f"truncation N={N} is below the twist bandwidth {b}")

    def A(R_out, R_in):
        mult = _multiplier({q: 2 * complex(c) for q, c in coeffs.items()}, 2, R_out, R_in)
        dx = _derivative(0, 1.0, 2, R_out, R_in)
        dy = _derivative(1, 1.0, 2, R_out, R_in)
        return (dx + 1j * dy) + mult

    out_big = A(N + b, N)
    in_big = A(N, N + b)
    lap0 = sps.csr_matrix(out_big.conj().T @ out_big)
    lap1 = sps.csr_matrix(in_big @ in_big.conj().T)
    inner = np.all(np.abs(box_modes(N, 2)) <= N - b, axis=1)
    return GradedOperatorSet(
        degrees=((0, "(0,0)"), (1, "(0,1)")), laplacians=(lap0, lap1), chain_maps=(A(N, N),), N=N,
        resolved=(inner, inner), kind="dolbeault",
        meta={"model": model.to_dict(), "theta": str(expr), "bandwidth": b, "basis": "fourier"},
    )


def product_complex(c1: GradedOperatorSet, c2: GradedOperatorSet, size_cap: int = PRODUCT_SIZE_CAP) -> GradedOperatorSet:
    """Tensor product complex with ``d = d_1 x id + (-1)^p id x d_2``."""
    if c1.meta.get("boundary") or c2.meta.get("boundary"):
        raise UnsupportedConfigurationError("products are formed from boundaryless complexes")
    n1, n2 = len(c1.degrees), len(c2.degrees)
    top = n1 + n2 - 2
    # descending p puts the first factor's forms first, matching the torus layout (dx, dy)
    pairs = [[(p, n - p) for p in reversed(range(n1)) if 0 <= n - p < n2] for n in range(top + 1)]
    sizes = [sum(c1.sizes[p] * c2.sizes[q] for p, q in pr) for pr in pairs]
    if max(sizes) > size_cap:
        raise UnsupportedConfigurationError(f"product block of size {max(sizes)} exceeds the cap {size_cap}")
    eye1 = [sps.identity(s, dtype=complex, format="csr") for s in c1.sizes]
    eye2 = [sps.identity(s, dtype=complex, format="csr") for s in c2.sizes]
    lap = []
    resolved = []
    for pr in pairs:
        lap.append(sps.block_diag([sps.kron(c1.laplacians[p], eye2[q]) + sps.kron(eye1[p], c2.laplacians[q])
                                   for p, q in pr], format="csr"))
        resolved.append(np.concatenate([np.kron(c1.resolved[p], c2.resolved[q]) for p, q in pr]))
    chain = []
    for n in range(top):
        src, dst = pairs[n], pairs[n + 1]
        grid = [[None] * len(src) for _ in dst]
        for s, (p, q) in enumerate(src):
            for r, (pp, qq) in enumerate(dst):
                if (pp, qq) == (p + 1, q):
                    grid[r][s] = sps.kron(c1.chain_maps[p], eye2[q])
                elif (pp, qq) == (p, q + 1):
                    grid[r][s] = (-1) ** p * sps.kron(eye1[p], c2.chain_maps[q])
        for r, (pp, qq) in enumerate(dst):
            for s, (p, q) in enumerate(src):
                if grid[r][s] is None:
                    grid[r][s] = sps.csr_matrix((c1.sizes[pp] * c2.sizes[qq], c1.sizes[p] * c2.sizes[q]),
                                                dtype=complex)
        chain.append(sps.bmat(grid, format="csr"))
    degrees = tuple((n, "+".join(f"{c1.degrees[p][1]}*{c2.degrees[q][1]}" for p, q in pr))
                    for n, pr in enumerate(pairs))
    return GradedOperatorSet(
        degrees=degrees, laplacians=tuple(lap), chain_maps=tuple(chain), N=min(c1.N, c2.N),
        resolved=tuple(resolved), kind=c1.kind,
        meta={"product": [c1.meta, c2.meta]},
    )


# matrix-bundle export ---------------------------------------------------------

def export_bundle(ops: GradedOperatorSet, path) -> None:
    """Write a JSON header line followed by dense column-major complex128 blocks."""
    blocks = [(f"laplacian_{p}", m) for (p, _), m in zip(ops.degrees, ops.laplacians)]
    blocks += [(f"d_{p}", m) for p, m in enumerate(ops.chain_maps)]
    entries = []
    offset = 0
    for name, mat in blocks:
        entries.append({"name": name, "rows": mat.shape[0], "cols": mat.shape[1],
                        "dtype": "complex128", "order": "F", "offset": offset})
        offset += mat.shape[0] * mat.shape[1] * 16
    header = {"format": BUNDLE_MAGIC, "version": 1, "N": ops.N, "kind": ops.kind,
              "degrees": [[p, label] for p, label in ops.degrees], "blocks": entries}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for _, mat in blocks:
            fh.write(np.asarray(mat.toarray(), dtype="<c16").tobytes(order="F"))


def load_bundle(path) -> tuple[dict, dict]:
    """Read a matrix bundle; returns ``(header, {name: dense array})``."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != BUNDLE_MAGIC:
            raise SchemaError("not a heatlab matrix bundle")
        data = fh.read()
    arrays = {}
    for e in header["blocks"]:
        n = e["rows"] * e["cols"]
        flat = np.frombuffer(data, dtype="<c16", count=n, offset=e["offset"])
        arrays[e["name"]] = flat.reshape((e["rows"], e["cols"]), order="F")
    return header, arrays
