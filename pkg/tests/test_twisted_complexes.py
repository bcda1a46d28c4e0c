import math

import numpy as np
import pytest
import scipy.sparse as sps
from hypothesis import given
from hypothesis import strategies as st

from heatlab.exceptions import AliasingError, SchemaError, UnsupportedConfigurationError
from heatlab.model_manifolds import ModelManifold, TwistForm, exact_twist
from heatlab.spectral_engine import betti, eigensolve, index
from heatlab.twisted_complexes import (BoundaryConditionSpec, assemble_circle, assemble_dolbeault_torus,
                                       assemble_interval, assemble_torus, export_bundle, load_bundle,
                                       product_complex)

CIRCLE = ModelManifold.circle()
TORUS = ModelManifold.flat_torus()


def circle_twist(expr):
    return TwistForm.on(CIRCLE, [expr])


def torus_twist(ex, ey):
    return TwistForm.on(TORUS, [ex, ey])


def eigs(ops, p):
    return np.sort(np.linalg.eigvalsh(ops.dense(p)))


def test_untwisted_circle_spectrum():
    ops = assemble_circle(circle_twist("0"), 8)
    expected = np.sort([float(k * k) for k in range(-8, 9)])
    assert np.allclose(eigs(ops, 0), expected) and np.allclose(eigs(ops, 1), expected)


@pytest.mark.parametrize("c", [0.3, 0.7, -1.2])
def test_constant_twist_circle_spectrum(c):
    ops = assemble_circle(circle_twist(str(c)), 10)
    expected = np.sort([k * k + c * c for k in range(-10, 11)])
    assert np.allclose(eigs(ops, 0), expected, atol=1e-12)
    assert np.allclose(eigs(ops, 1), expected, atol=1e-12)
    assert betti(eigensolve(ops)) == (0, 0)


def test_sign_flip_exchanges_degrees():
    plus = assemble_circle(circle_twist("0.8*sin(x)"), 30)
    minus = assemble_circle(circle_twist("-0.8*sin(x)"), 30)
    assert np.allclose(eigs(plus, 1), eigs(minus, 0), atol=1e-10)


def test_aliasing_and_closedness_refusals():
    with pytest.raises(AliasingError):
        assemble_circle(circle_twist("sin(5*x)"), 3)
    with pytest.raises(SchemaError):
        TwistForm.on(TORUS, ["sin(y)", "0"])
    with pytest.raises(UnsupportedConfigurationError):
        assemble_interval(BoundaryConditionSpec("relative"), 10, theta=circle_twist("0.3"))


def test_untwisted_torus():
    ops = assemble_torus(torus_twist("0", "0"), 6)
    assert ops.sizes == (169, 338, 169)
    spec = eigensolve(ops)
    assert betti(spec) == (1, 2, 1) and index(spec) == 0
    expected = np.sort([float(a * a + b * b) for a in range(-6, 7) for b in range(-6, 7)])
    assert np.allclose(eigs(ops, 0), expected)
    assert np.allclose(eigs(ops, 1), np.sort(np.concatenate([expected, expected])))


def test_torus_constant_twist_and_gauge():
    base = eigensolve(assemble_torus(torus_twist("0.7", "0"), 12))
    assert betti(base) == (0, 0, 0)
    for eps in (0.1, 0.5):
        gauged = torus_twist("0.7", "0") + exact_twist(TORUS, f"{eps}*sin(x)")
        assert betti(eigensolve(assemble_torus(gauged, 12))) == (0, 0, 0)


@given(seed=st.integers(0, 2**32 - 1))
def test_random_closed_twists_are_chain_complexes(seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=2) * 0.5
    a, b = rng.normal(size=2) * 0.3
    twist = torus_twist(str(c[0]), str(c[1])) + exact_twist(TORUS, f"{a}*sin(x+y) + {b}*cos(2*y)")
    ops = assemble_torus(twist, 8)
    assert ops.chain_defect() < 1e-9
    assert ops.adjoint_defect() == 0


def test_laplacian_is_d_star_d_plus_d_d_star():
    ops = assemble_torus(torus_twist("0.3", "0.2 + 0.4*sin(y)"), 6)
    d0, d1 = ops.chain_maps
    # interior degree: compare on resolved columns, where the truncation is exact
    cols = np.flatnonzero(ops.resolved[1])
    lap = ops.dense(1)[:, cols]
    direct = (d0 @ d0.conj().T + d1.conj().T @ d1).toarray()[:, cols]
    assert np.allclose(lap, direct, atol=1e-12)


def test_nonzero_constant_twist_kills_h0():
    for ex in ("0.2 + 0.3*cos(x)", "-0.5"):
        spec = eigensolve(assemble_torus(torus_twist(ex, "0.1*sin(y)"), 10))
        assert betti(spec)[0] == 0


def test_poincare_duality_sample():
    t = torus_twist("0.4 + 0.3*cos(x)", "0")
    plus = betti(eigensolve(assemble_torus(t, 12)))
    minus = betti(eigensolve(assemble_torus(-t, 12)))
    assert plus == minus[::-1]


def test_imaginary_exact_twist_is_gauge_trivial():
    N = 12
    base = eigs(assemble_torus(torus_twist("0", "0"), N), 0)
    gauged = eigs(assemble_torus(exact_twist(TORUS, "0.5*sin(x)").scale(1j), N), 0)
    cut = (N / 2) ** 2 - 0.5  # inside a gap of the integer spectrum
    a, b = base[base < cut], gauged[gauged < cut]
    assert len(a) == len(b) and np.allclose(a, b, atol=1e-8)


@pytest.mark.parametrize("flavor, pattern", [("relative", (0, 1)), ("absolute", (1, 0))])
def test_interval_patterns(flavor, pattern):
    ops = assemble_interval(BoundaryConditionSpec(flavor), 100)
    spec = eigensolve(ops)
    assert betti(spec) == pattern
    assert index(spec) == pattern[0] - pattern[1]
    assert ops.chain_defect() == 0


def test_interval_rescaled_spectrum():
    ops = assemble_interval(BoundaryConditionSpec("relative"), 20, length=2 * math.pi)
    assert np.allclose(eigs(ops, 0), [n * n / 4 for n in range(1, 21)])
    assert np.allclose(eigs(ops, 1), [n * n / 4 for n in range(0, 21)])


def test_dolbeault_untwisted_and_constant():
    N = 4
    ops = assemble_dolbeault_torus("0", N)
    expected = np.sort([4 * math.pi**2 * (k * k + l * l) for k in range(-N, N + 1) for l in range(-N, N + 1)])
    assert np.allclose(eigs(ops, 0), expected) and np.allclose(eigs(ops, 1), expected)
    assert betti(eigensolve(ops)) == (1, 1)
    c = 0.3 + 0.2j
    ops = assemble_dolbeault_torus("0.3+0.2*i", N)
    exact = np.sort([4 * abs(c + math.pi * (1j * k - l)) ** 2 for k in range(-N, N + 1) for l in range(-N, N + 1)])
    assert np.allclose(eigs(ops, 0), exact) and np.allclose(eigs(ops, 1), exact)
    assert betti(eigensolve(ops)) == (0, 0)


def test_product_matches_torus_and_kunneth():
    N = 6
    t1, t2 = circle_twist("0.4*sin(x)"), circle_twist("0")
    prod = product_complex(assemble_circle(t1, N), assemble_circle(t2, N))
    torus = assemble_torus(torus_twist("0.4*sin(x)", "0"), N)
    for p in range(3):
        assert np.allclose(eigs(prod, p), eigs(torus, p), atol=1e-9)
    b1 = betti(eigensolve(assemble_circle(t1, N)))
    b2 = betti(eigensolve(assemble_circle(t2, N)))
    kunneth = tuple(sum(b1[p] * b2[n - p] for p in range(2) if 0 <= n - p < 2) for n in range(3))
    assert betti(eigensolve(prod)) == kunneth
    with pytest.raises(UnsupportedConfigurationError):
        product_complex(assemble_circle(t1, 100), assemble_circle(t2, 100), size_cap=1000)


def test_bundle_round_trip(tmp_path):
    ops = assemble_torus(torus_twist("0.3", "0.1*cos(y)"), 3)
    path = tmp_path / "ops.bundle"
    export_bundle(ops, path)
    header, arrays = load_bundle(path)
    assert header["N"] == 3 and [d[1] for d in header["degrees"]] == ["1", "dx,dy", "dxdy"]
    assert np.array_equal(arrays["laplacian_1"], ops.dense(1))
    assert np.array_equal(arrays["d_0"], ops.chain_maps[0].toarray())
    bad = tmp_path / "bad"
    bad.write_text('{"format": "other"}\n')
    with pytest.raises(SchemaError):
        load_bundle(bad)


def test_sparse_outputs():
    ops = assemble_circle(circle_twist("0.2*cos(x)"), 5)
    assert all(sps.issparse(m) for m in ops.laplacians)
