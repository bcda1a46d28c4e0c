import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heatlab.exceptions import SchemaError, UnsupportedConfigurationError
from heatlab.model_manifolds import (ModelManifold, TwistForm, euler_characteristic, exact_twist, integrate, product,
                                     product_twist, restrict_by_circle)


def test_constant_on_circle():
    assert integrate(ModelManifold.circle(), lambda p: np.ones(len(p))) == pytest.approx(2 * math.pi)


@given(st.lists(st.floats(-1, 1), min_size=5, max_size=5), st.integers(1, 40))
def test_band_limited_quadrature_is_exact(coef, k):
    c0, a, b, c, d = coef

    def density(p):
        x = p[:, 0]
        return c0 + a * np.sin(k * x) + b * np.cos(k * x) + c * np.sin(3 * x) * np.cos(2 * x) + d * np.cos(x) ** 2

    exact = 2 * math.pi * (c0 + d / 2)
    assert integrate(ModelManifold.circle(), density) == pytest.approx(exact, abs=1e-12)


def test_torus_quadrature_exact():
    torus = ModelManifold.flat_torus((2.0, 3.0))
    val = integrate(torus, lambda p: 1 + np.sin(math.pi * p[:, 0]) * np.cos(2 * math.pi * p[:, 1] / 3))
    assert val == pytest.approx(6.0, abs=1e-12)
    assert torus.volume == 6.0


def test_volumes():
    assert ModelManifold.round_sphere(2).volume == pytest.approx(4 * math.pi, abs=1e-10)
    assert ModelManifold.round_sphere(4).volume == pytest.approx(8 * math.pi**2 / 3, abs=1e-10)
    assert ModelManifold.interval(2.5).volume == pytest.approx(2.5)
    assert ModelManifold.flat_torus((2 * math.pi, 2 * math.pi)).volume == (2 * math.pi) ** 2


def test_gauss_bonnet_on_spheres_and_torus():
    assert euler_characteristic(ModelManifold.round_sphere(2)) == pytest.approx(2.0, abs=1e-10)
    assert euler_characteristic(ModelManifold.flat_torus()) == 0
    assert euler_characteristic(ModelManifold.circle()) == 0


def test_super_a2_density_integrates_to_zero():
    twist = TwistForm.on(ModelManifold.circle(), ["0.7*sin(x) + 0.2*cos(3*x)"])

    def density(p):
        x = p[:, 0]
        return (0.7 * np.cos(x) - 0.6 * np.sin(3 * x)) / math.sqrt(math.pi)

    assert twist.bandwidth == (3,)
    assert integrate(ModelManifold.circle(), density) == pytest.approx(0.0, abs=1e-13)


def test_products_and_circle_restriction():
    c = ModelManifold.circle()
    t = product(c, c)
    assert t.kind == "flatTorus" and t.dim == 2
    assert restrict_by_circle(c).kind == "flatTorus"
    assert restrict_by_circle(ModelManifold.point()).kind == "circle"
    cyl = restrict_by_circle(ModelManifold.interval())
    assert cyl.dim == 2 and cyl.has_boundary
    with pytest.raises(UnsupportedConfigurationError):
        product(ModelManifold.interval(), c)


def test_product_twist():
    c = ModelManifold.circle()
    tw = product_twist(TwistForm.on(c, ["0.4*sin(x)"]), TwistForm.zero(c.periods))
    assert tw.dim == 2
    pts = np.array([[0.3, 1.0], [1.2, -0.5]])
    vals = tw.evaluate(pts)
    assert np.allclose(vals[:, 0], 0.4 * np.sin(pts[:, 0]))
    assert np.allclose(vals[:, 1], 0)


def test_twist_algebra_and_harmonic_part():
    torus = ModelManifold.flat_torus()
    a = TwistForm.on(torus, ["0.3 + 0.2*cos(x)", "0.5"])
    assert np.allclose(a.harmonic, [0.3, 0.5])
    assert np.allclose((-a).harmonic, [-0.3, -0.5])
    g = exact_twist(torus, "0.5*sin(x+y)")
    assert np.allclose((a + g).harmonic, [0.3, 0.5])
    assert a.is_real and not a.scale(1j).is_real
    with pytest.raises(SchemaError):
        TwistForm.on(torus, ["sin(y)", "0"])


def test_json_round_trips():
    for model in (ModelManifold.circle(3.0), ModelManifold.flat_torus((1.0, 2.0)), ModelManifold.interval(),
                  ModelManifold.round_sphere(2), ModelManifold.complex_torus()):
        assert ModelManifold.from_dict(model.to_dict()) == model
    tw = TwistForm.on(ModelManifold.flat_torus(), ["0.3", "0.2*sin(y)"])
    again = TwistForm.from_dict(tw.to_dict())
    assert again.expressions == tw.expressions
    assert np.allclose(again.evaluate(np.array([[0.2, 0.9]])), tw.evaluate(np.array([[0.2, 0.9]])))
    with pytest.raises(SchemaError):
        ModelManifold.from_dict({"kind": "hyperboloid"})


def test_interval_boundary_points():
    assert ModelManifold.interval(2.0).boundary_points() == [(0.0, 1), (2.0, -1)]
