import math

import numpy as np
import pytest
import sympy as sp
from conftest import random_metric_jet
from hypothesis import given
from hypothesis import strategies as st

from heatlab.exceptions import MissingJetError, UnsupportedConfigurationError
from heatlab.laplace_ops import (BoundaryData, LaplaceCoefficients, a0, a2, a2n_leading, a4, boundary_a, boundary_Q,
                                 canonicalize, dolbeault_a2, dolbeault_coefficients, dolbeault_twist, euler_form,
                                 permutation_sign, recompose, sphere_volume, twisted_circle_coefficients,
                                 twisted_circle_invariants, wedge_pairing)
from heatlab.tensor_core import Chart, MetricJet, curvature

X = sp.Symbol("x", real=True)


def circle_jets(expr, x0, order=3):
    e = sp.sympify(expr, locals={"x": X})
    return [float(sp.diff(e, X, k).subs(X, x0)) for k in range(order + 1)]


def random_trig(rng, terms=3):
    e = sp.Float(rng.normal() * 0.5)
    for k in range(1, terms + 1):
        e += sp.Float(rng.normal() * 0.5) * sp.sin(k * X) + sp.Float(rng.normal() * 0.5) * sp.cos(k * X)
    return e


def random_operator(rng, m, f, order=1):
    A = [rng.normal(size=(m, f, f) + (m,) * k) for k in range(order + 1)]
    B = [rng.normal(size=(f, f) + (m,) * k) for k in range(order)]
    return LaplaceCoefficients(A, B)


def test_scalar_circle_operator_is_already_canonical():
    jet = MetricJet.euclidean(1)
    op = LaplaceCoefficients([np.zeros((1, 1, 1))], [np.zeros((1, 1))], polynomial=True)
    can = canonicalize(op, jet)
    assert np.all(can.omega == 0) and np.all(can.E == 0)


def test_twisted_circle_endomorphism():
    jets = circle_jets("0.7*sin(x) + 0.2", 0.4)
    op0, op1 = twisted_circle_coefficients(jets)
    can = canonicalize(op0, MetricJet.euclidean(1))
    theta, dtheta = jets[0], jets[1]
    assert np.allclose(can.omega, 0)
    assert can.E[0, 0] == pytest.approx(dtheta - theta**2)
    assert canonicalize(op1, MetricJet.euclidean(1)).E[0, 0] == pytest.approx(-dtheta - theta**2)


@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 3), f=st.integers(1, 3))
def test_canonicalize_recompose_round_trip(seed, m, f):
    rng = np.random.default_rng(seed)
    op = random_operator(rng, m, f)
    jet = random_metric_jet(rng, m, order=2)
    A, B = recompose(canonicalize(op, jet, e_order=0))
    assert np.max(np.abs(A - op.A[0])) < 1e-9
    assert np.max(np.abs(B - op.B[0])) < 1e-9


def test_flat_trivial_invariants():
    jet = MetricJet.euclidean(2)
    op = LaplaceCoefficients([np.zeros((2, 1, 1))], [np.zeros((1, 1))], polynomial=True)
    can, pack = canonicalize(op, jet), curvature(jet)
    assert a0(can) == pytest.approx(1 / (4 * math.pi))
    assert a2(can, pack) == 0 and a4(can, pack) == 0


@pytest.mark.parametrize("x0", [0.0, 0.4, 2.0])
def test_twisted_circle_a2_and_super_a4(x0):
    expr = "0.7*sin(x) + 0.3*cos(2*x) + 0.1"
    th, d1, d2, d3 = circle_jets(expr, x0)
    inv = twisted_circle_invariants([th, d1, d2, d3])
    norm = (4 * math.pi) ** -0.5
    assert inv[0]["a2"] == pytest.approx(norm * (d1 - th**2), abs=1e-12)
    assert inv["super"]["a0"] == 0
    assert inv["super"]["a2"] == pytest.approx(2 * norm * d1, abs=1e-12)
    assert inv["super"]["a4"] == pytest.approx(norm * (d3 / 3 - 2 * d1 * th**2), abs=1e-12)


def test_super_a2_on_circle_for_random_twists(rng):
    for _ in range(20):
        e = random_trig(rng)
        x0 = rng.uniform(0, 2 * math.pi)
        jets = [float(sp.diff(e, X, k).subs(X, x0)) for k in range(4)]
        super_a2 = twisted_circle_invariants(jets)["super"]["a2"]
        assert super_a2 == pytest.approx(jets[1] / math.sqrt(math.pi), abs=1e-10)


def test_supertrace_cancels_at_order_zero():
    for m in (1, 2, 3, 4):
        total = 0.0
        for p in range(m + 1):
            f = math.comb(m, p)
            op = LaplaceCoefficients([np.zeros((m, f, f))], [np.zeros((f, f))], polynomial=True)
            total += (-1) ** p * a0(canonicalize(op, MetricJet.euclidean(m)))
        assert total == pytest.approx(0.0, abs=1e-15)


def test_a2n_leading_on_circle():
    # E = theta' with theta = sin(2x): the n = 2 leading term is const * theta'''
    e = sp.sin(2 * X)
    x0 = 0.3
    B = [np.array([[float(sp.diff(e, X, k + 1).subs(X, x0))]]).reshape((1, 1) + (1,) * k) for k in range(3)]
    op = LaplaceCoefficients([np.zeros((1, 1, 1) + (1,) * k) for k in range(4)], B)
    can = canonicalize(op, MetricJet.euclidean(1), e_order=2)
    const = (4 * math.pi) ** -0.5 * 20 / (2**3 * 1 * 3 * 5)
    assert a2n_leading(can, 2) == pytest.approx(const * float(sp.diff(e, X, 3).subs(X, x0)), abs=1e-12)
    const1 = (4 * math.pi) ** -0.5 * 12 / (2**2 * 3)
    assert a2n_leading(can, 1) == pytest.approx(const1 * B[0][0, 0])


def test_a2n_leading_constant_E_and_curved_refusal():
    op = LaplaceCoefficients([np.zeros((2, 1, 1))], [np.full((1, 1), 0.7)], polynomial=True)
    can = canonicalize(op, MetricJet.euclidean(2), e_order=2)
    assert a2n_leading(can, 2) == 0
    chart = Chart(2, "round_sphere_2")
    curved = canonicalize(LaplaceCoefficients([np.zeros((2, 1, 1))], [np.zeros((1, 1))], polynomial=True),
                          chart.metric_jet(np.array([1.0, 0.0])), e_order=0)
    with pytest.raises(UnsupportedConfigurationError):
        a2n_leading(curved, 1)


def test_scalar_laplacian_on_sphere():
    chart = Chart(2, "round_sphere_2")
    jet = chart.metric_jet(np.array([0.9, 0.1]), order=4)
    pack = curvature(jet)
    from heatlab.cli import ExperimentConfig, cmd_coeffs

    out = cmd_coeffs(ExperimentConfig(command="coeffs", chart=chart.to_dict(), point=[0.9, 0.1]))
    norm = 1 / (4 * math.pi)
    assert out["a2"] == pytest.approx(norm * float(pack.tau) / 6)
    # (5 tau^2 - 2|rho|^2 + 2|R|^2) / 360 on the unit sphere = 24 / 360
    assert out["a4"] == pytest.approx(norm * 24 / 360)


def test_euler_form_specialisations(rng):
    assert euler_form(curvature(MetricJet.euclidean(2))) == 0
    s2 = curvature(Chart(2, "round_sphere_2").metric_jet(np.array([1.0, 0.0])))
    assert euler_form(s2) == pytest.approx(1 / (2 * math.pi))
    for _ in range(5):
        pack = curvature(random_metric_jet(rng, 4))
        closed = (pack.tau**2 - 4 * pack.normRho2 + pack.normR2) / (32 * math.pi**2)
        assert euler_form(pack) == pytest.approx(closed, rel=1e-10, abs=1e-12)
        pack2 = curvature(random_metric_jet(rng, 2))
        assert euler_form(pack2) == pytest.approx(pack2.tau / (4 * math.pi))
    assert euler_form(curvature(random_metric_jet(rng, 3))) == 0


def test_euler_form_vanishes_with_flat_factor(rng):
    j = random_metric_jet(rng, 3)
    jets = []
    for k, a in enumerate(j.jets()):
        arr = np.zeros((4, 4) + (4,) * k)
        arr[(slice(0, 3), slice(0, 3)) + (slice(0, 3),) * k] = a
        if k == 0:
            arr[3, 3] = 1.0
        jets.append(arr)
    assert euler_form(curvature(MetricJet(*jets))) == pytest.approx(0.0, abs=1e-12)


def test_permutation_sign_and_wedge_pairing():
    assert permutation_sign([0, 1, 2]) == 1
    assert permutation_sign([1, 0, 2]) == -1
    assert permutation_sign([2, 0, 1]) == 1
    assert wedge_pairing((0, 1), (1, 0)) == -1
    assert sphere_volume(2) == pytest.approx(4 * math.pi)
    assert sphere_volume(1) == pytest.approx(2 * math.pi)
    assert sphere_volume(0) == 2


def test_boundary_Q_low_dimensions(rng):
    assert boundary_Q(None, [[0.8]], 0, 2) == pytest.approx(0.8 / (2 * math.pi))
    assert boundary_Q(None, np.zeros((2, 2)), 0, 3) == 0
    pack = curvature(random_metric_jet(rng, 3))
    L = rng.normal(size=(2, 2))
    L = L + L.T
    R = pack.riemann
    # repeated indices are summed
    display = (np.einsum("abba->", R[:2, :2, :2, :2]) + np.trace(L) ** 2 - np.sum(L * L)) / (8 * math.pi)
    total = boundary_Q(pack, L, 0, 3) + boundary_Q(pack, L, 1, 3)
    assert total == pytest.approx(display, rel=1e-10)
    with pytest.raises(ValueError):
        boundary_Q(pack, L, 2, 3)


def test_boundary_Q_four_dimensions(rng):
    for _ in range(5):
        pack = curvature(random_metric_jet(rng, 4))
        R, tau = pack.riemann, float(pack.tau)
        L = rng.normal(size=(3, 3))
        L = L + L.T
        t = range(3)
        trL = np.trace(L)
        display = (3 * tau * trL + 6 * sum(R[a, 3, a, 3] for a in t) * trL
                   + 6 * sum(R[a, c, b, c] * L[a, b] for a in t for b in t for c in t)
                   + 2 * trL**3 - 6 * np.sum(L * L) * trL + 4 * np.trace(L @ L @ L)) / (24 * math.pi**2)
        total = boundary_Q(pack, L, 0, 4) + boundary_Q(pack, L, 1, 4)
        assert total == pytest.approx(display, rel=1e-10)


def test_boundary_a_examples():
    assert boundary_a(0, BoundaryData.dirichlet(1, m=1), m=1) == pytest.approx(-0.25)
    assert boundary_a(1, BoundaryData.robin(0.0, 1, m=1), m=1) == 0
    s, m, f = 0.6, 3, 2
    jet = MetricJet.euclidean(m)
    op = LaplaceCoefficients([np.zeros((m, f, f))], [np.zeros((f, f))], polynomial=True)
    can, pack = canonicalize(op, jet), curvature(jet)
    bd = BoundaryData.robin(s, f, np.zeros((m - 1, m - 1)), m)
    expected = 192 * s**2 * f / 384 * (4 * math.pi) ** (-(m - 1) / 2)
    assert boundary_a(2, bd, can, pack) == pytest.approx(expected)
    with pytest.raises(UnsupportedConfigurationError):
        boundary_a(3, bd, can, pack)
    with pytest.raises(MissingJetError):
        boundary_a(2, bd)


def test_dolbeault_density_flat_and_sphere():
    pack = curvature(MetricJet.euclidean(2))
    assert dolbeault_a2(pack, dolbeault_twist([0.3 + 0.1j, np.zeros(2)])) == 0
    # theta = sin(2 pi x): density = (1/pi)(d_z theta + d_zbar conj theta) = Re(theta_x) / pi
    x0 = 0.2
    dth = 2 * math.pi * math.cos(2 * math.pi * x0)
    twist = dolbeault_twist([math.sin(2 * math.pi * x0), np.array([dth, 0.0])])
    assert dolbeault_a2(pack, twist) == pytest.approx(dth / math.pi)
    sphere = curvature(Chart(2, "round_sphere_2").metric_jet(np.array([1.0, 0.0])))
    assert 4 * math.pi * dolbeault_a2(sphere, dolbeault_twist([0j, np.zeros(2)])) == pytest.approx(1.0)
    with pytest.raises(UnsupportedConfigurationError):
        dolbeault_a2(curvature(MetricJet.euclidean(3)), dolbeault_twist([0j, np.zeros(2)]))


def test_dolbeault_supertrace_matches_canonical_route():
    x0, y0 = 0.3, 0.1
    th = complex(0.4 * math.sin(2 * math.pi * x0), 0.2)
    dth = np.array([0.8 * math.pi * math.cos(2 * math.pi * x0), 0.0], dtype=complex)
    d2th = np.zeros((2, 2), dtype=complex)
    d2th[0, 0] = -0.4 * (2 * math.pi) ** 2 * math.sin(2 * math.pi * x0)
    ops = dolbeault_coefficients([th, dth, d2th])
    jet, pack = MetricJet.euclidean(2), curvature(MetricJet.euclidean(2))
    sup = a2(canonicalize(ops[0], jet, 0), pack) - a2(canonicalize(ops[1], jet, 0), pack)
    assert sup == pytest.approx(dolbeault_a2(pack, dolbeault_twist([th, dth])), abs=1e-12)


def test_super_leading_term_is_odd_derivative_of_theta():
    # the supertrace of the leading term is c_n * theta^{(2n-1)}; c_n is checked to be point-independent and nonzero
    e = 0.5 * sp.sin(X) + 0.3 * sp.cos(2 * X)
    for n in (1, 2):
        ratios = []
        for x0 in (0.3, 1.1, 2.5):
            jets = [float(sp.diff(e, X, k).subs(X, x0)) for k in range(2 * n + 1)]
            ops = twisted_circle_coefficients(jets)
            lead = [a2n_leading(canonicalize(op, MetricJet.euclidean(1), e_order=2 * n - 2), n) for op in ops]
            ratios.append((lead[0] - lead[1]) / float(sp.diff(e, X, 2 * n - 1).subs(X, x0)))
        assert ratios[0] != 0 and np.allclose(ratios, ratios[0])
