import math

import mpmath
import numpy as np
import pytest
import scipy.sparse as sps
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from heatlab.exceptions import AmbiguousKernelError, NumericalContractError, SchemaError
from heatlab.model_manifolds import ModelManifold, TwistForm
from heatlab.spectral_engine import (HeatTraceRegressor, SpectralHeatTransformer, SpectrumSet, WindowError, betti,
                                     curves_csv, eigensolve, fit_asymptotics, geometric_grid, heat_trace, index,
                                     kernel_report, spectral_distance, supertrace)
from heatlab.twisted_complexes import (BoundaryConditionSpec, GradedOperatorSet, assemble_circle, assemble_interval,
                                       assemble_torus)

CIRCLE = ModelManifold.circle()


def circle(expr, N):
    return assemble_circle(TwistForm.on(CIRCLE, [expr]), N)


def single_block(diag):
    mat = sps.csr_matrix(np.diag(diag).astype(complex))
    n = len(diag)
    return GradedOperatorSet(((0, "1"),), (mat,), (), n, (np.ones(n, bool),))


def test_circle_spectrum_values():
    spec = eigensolve(circle("0", 8))
    assert np.allclose(spec.eigenvalues[0][:5], [0, 1, 1, 4, 4])
    c = 0.45
    spec = eigensolve(circle(str(c), 8))
    assert np.allclose(spec.eigenvalues[0], np.sort([k * k + c * c for k in range(-8, 9)]))


def test_interval_spectrum_and_supertrace():
    spec = eigensolve(assemble_interval(BoundaryConditionSpec("relative"), 200))
    assert np.allclose(spec.eigenvalues[0][:4], [1, 4, 9, 16])
    t = geometric_grid(max(spec.t_min, 0.05), 2.0)
    assert np.allclose(supertrace(spec, t), -1.0, atol=1e-8)


def test_jacobi_theta_oracle():
    spec = eigensolve(circle("0", 60))
    expected = float(mpmath.jtheta(3, 0, mpmath.e ** -1))
    assert expected == pytest.approx(1.7726372048, abs=1e-9)
    assert heat_trace(spec, 1.0)[0] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("ops", [
    circle("0.7*sin(x)", 120),
    assemble_torus(TwistForm.on(ModelManifold.flat_torus(), ["0.3 + 0.2*cos(x)", "0.5"]), 16),
    assemble_interval(BoundaryConditionSpec("absolute"), 200),
])
def test_mckean_singer_constancy(ops):
    spec = eigensolve(ops)
    t = geometric_grid(max(spec.t_min, 1e-3), 2.0)
    s = supertrace(spec, t)
    assert np.max(np.abs(s - s[-1])) < 1e-8
    assert s[-1] == pytest.approx(index(spec), abs=1e-8)


def test_window_refusal_reports_t_min():
    spec = eigensolve(circle("0", 20))
    with pytest.raises(WindowError) as err:
        heat_trace(spec, 1e-6)
    assert err.value.t_min == pytest.approx(spec.t_min)
    assert isinstance(err.value, NumericalContractError)


def test_non_hermitian_rejected():
    mat = sps.csr_matrix(np.array([[1.0, 0.5], [0.0, 2.0]], dtype=complex))
    ops = GradedOperatorSet(((0, "1"),), (mat,), (), 1, (np.ones(2, bool),))
    with pytest.raises(NumericalContractError):
        eigensolve(ops)


def test_ambiguous_kernel_raises():
    spec = eigensolve(single_block([1e-7] + list(np.arange(1.0, 40.0))))
    with pytest.raises(AmbiguousKernelError):
        betti(spec)
    clean = eigensolve(single_block([0.0] + list(np.arange(1.0, 40.0))))
    rep = kernel_report(clean)
    assert rep["betti"] == (1,) and rep["gap_ratio"] >= 100


def test_fit_untwisted_circle():
    spec = eigensolve(circle("0", 400))
    fit = fit_asymptotics(spec, m=1, degree=0, parity="even")
    assert fit.coefficient(0) == pytest.approx(math.sqrt(math.pi), abs=1e-6)
    for n in fit.orders[1:]:
        assert abs(fit.coefficient(n)) < 1e-6
    assert fit.powers == (-0.5, 0.5, 1.5)
    # odd orders left free still come out near zero
    loose = fit_asymptotics(spec, m=1, degree=0)
    assert max(abs(c) for c in loose.coefficients[1:]) < 1e-5


def test_fit_dirichlet_interval():
    spec = eigensolve(assemble_interval(BoundaryConditionSpec("relative"), 2000))
    fit = fit_asymptotics(spec, m=1, K=3, t_window=(0.01, 0.5), degree=0)
    assert fit.coefficient(0) == pytest.approx(math.sqrt(math.pi) / 2, abs=1e-6)
    assert fit.coefficient(1) == pytest.approx(-0.5, abs=1e-6)
    assert abs(fit.coefficient(2)) < 1e-6 and abs(fit.coefficient(3)) < 1e-6


def test_fit_refusals():
    spec = eigensolve(circle("0", 50))
    with pytest.raises(WindowError):
        fit_asymptotics(spec, m=1, t_window=(1e-6, 1e-2))
    with pytest.raises(SchemaError):
        fit_asymptotics(spec, m=1, K=9)
    with pytest.raises(NumericalContractError):
        fit_asymptotics(lambda t: np.exp(-t), m=1, K=5, t_window=(1.0, 1.0001))


def test_twisted_single_degree_c2():
    # Delta^0 with theta = 0.7 sin x: c2 = -(4 pi)^{-1/2} * integral of theta^2
    fit = fit_asymptotics(eigensolve(circle("0.7*sin(x)", 400)), m=1, K=4, parity="even", degree=0)
    assert fit.coefficient(2) == pytest.approx(-0.49 * math.pi / math.sqrt(4 * math.pi), rel=1e-3)


def test_spectral_distance_and_clusters():
    a = np.array([0.0, 1.0, 1.0, 4.0, 9.0])
    b = a + 1e-10
    dist, count = spectral_distance(a, b, 5.0)
    assert dist < 1e-9 and count == 4
    spec = eigensolve(circle("0", 4))
    assert spec.clusters(0)[:3] == [(pytest.approx(0.0, abs=1e-12), 1), (pytest.approx(1.0), 2),
                                    (pytest.approx(4.0), 2)]


def test_spectrum_json_and_csv():
    spec = eigensolve(circle("0.3", 10))
    again = SpectrumSet.from_dict(spec.to_dict())
    assert np.allclose(again.eigenvalues[1], spec.eigenvalues[1]) and again.N == spec.N
    text = curves_csv(spec, [1.0, 2.0])
    lines = text.strip().splitlines()
    assert lines[0] == "t,trace_0,trace_1,supertrace" and len(lines) == 3


def test_heat_trace_regressor():
    t = geometric_grid(1e-3, 0.5)[:, None]
    y = 2.0 * t[:, 0] ** -0.5 + 0.3 + 0.1 * t[:, 0] ** 0.5
    est = HeatTraceRegressor(m=1, K=2)
    with pytest.raises(NotFittedError):
        est.predict(t)
    est.fit(t, y)
    assert np.allclose(est.coef_, [2.0, 0.3, 0.1])
    assert np.allclose(est.predict(t), y)
    assert est.score(t, y) == pytest.approx(1.0)
    twin = clone(est)
    assert twin.get_params() == {"m": 1, "K": 2, "parity": "all"} and not hasattr(twin, "coef_")
    with pytest.raises(ValueError):
        est.fit(-t, y)


def test_spectral_heat_transformer():
    ops = circle("0.2", 200)
    tr = SpectralHeatTransformer().fit(ops)
    out = tr.transform(np.array([[0.5], [1.0]]))
    assert out.shape == (2, 3)
    assert np.allclose(out[:, 2], out[:, 0] - out[:, 1])
    assert tr.get_params()["reliable_fraction"] == 0.6
    with pytest.raises(TypeError):
        SpectralHeatTransformer().fit(np.zeros((3, 3)))
