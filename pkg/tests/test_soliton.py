import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ksl.soliton import (
    QuadratureError,
    RadialProfile,
    SolitonParams,
    SpanError,
    build_profile,
    flat_profile,
    ode_rhs,
    ode_rhs_derivatives,
    soliton_residual,
    t_derivatives,
)
from ksl.kernels import eval_f


def test_params_validation():
    with pytest.raises(ValueError):
        SolitonParams(2, 1.0)
    with pytest.raises(ValueError):
        SolitonParams(0, 2.0)
    with pytest.raises(ValueError):
        SolitonParams(2, float("nan"))
    with pytest.raises(ValueError):
        SolitonParams(20, 2.0)


@pytest.mark.parametrize("n", range(1, 6))
def test_ode_constant(n):
    p = SolitonParams(n, 3.0)
    assert p.ode_constant == (-1) ** (n + 1) * math.factorial(n) * (1 - 3.0)


def test_rhs_hand_value():
    # 1 - f_2(2)/4 with f_2(2) = e^{-2} - 1 + 2
    expected = 1 - (math.exp(-2) + 1) / 4
    assert ode_rhs(SolitonParams(1, 2.0), 1.0) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.7161661792, abs=1e-10)


def test_rhs_near_origin_and_bracket():
    p = SolitonParams(3, 2.5)
    assert ode_rhs(p, 1e-9) / 1e-9 == pytest.approx(1.0, rel=1e-8)
    val = ode_rhs(SolitonParams(2, 1.5), 3.0)
    assert 0 < val < 3


@given(n=st.integers(1, 5), lam=st.floats(1.05, 8.0), phi=st.floats(1e-6, 300.0))
@settings(max_examples=300, deadline=None)
def test_rhs_between_zero_and_phi(n, lam, phi):
    val = ode_rhs(SolitonParams(n, lam), phi)
    assert 0 < val < phi


def test_rhs_rejects_bad_phi():
    with pytest.raises(ValueError):
        ode_rhs(SolitonParams(2, 2.0), 0.0)
    with pytest.raises(ValueError):
        ode_rhs(SolitonParams(2, 2.0), np.array([1.0, -1.0]))


@pytest.mark.parametrize("n", [1, 2, 4])
def test_rhs_derivatives_against_mpmath(n):
    lam = 1.7
    params = SolitonParams(n, lam)
    k = params.kernel_factor

    def big(phi):
        x = lam * phi
        f = (-1) ** (n + 1) * (mp.exp(-x) - mp.fsum((-x) ** j / mp.factorial(j) for j in range(n + 1)))
        return phi - k * phi ** (1 - n) * f

    mp.mp.dps = 50
    for phi in (0.05, 0.8, 3.0, 20.0):
        got = ode_rhs_derivatives(params, phi)
        for order, val in enumerate(got):
            ref = float(mp.diff(big, mp.mpf(phi), order))
            assert float(val) == pytest.approx(ref, rel=1e-9, abs=1e-14)


def test_fourth_derivative_by_chain_rule():
    params = SolitonParams(2, 2.0)
    phi = np.array([0.3, 1.0, 4.0])
    d1, d2, d3, d4 = t_derivatives(params, phi, order=4)
    # d/dt of phi''' = (d phi'''/d phi) * phi'
    h = 1e-5 * phi
    up = t_derivatives(params, phi + h)[2]
    down = t_derivatives(params, phi - h)[2]
    np.testing.assert_allclose(d4, (up - down) / (2 * h) * d1, rtol=1e-7)


def test_build_example_wide_range():
    p = build_profile(SolitonParams(1, 2.0), phi_min=1e-4, phi_max=1e4, node_count=4096)
    assert soliton_residual(p, 2.0) < 1e-8
    assert np.all(np.diff(p.phi) > 0) and np.all(p.phi1 > 0)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("lam", [1.5, 2.0, 4.0])
def test_residual_on_default_profiles(make_soliton, n, lam):
    p = make_soliton(n, lam)
    assert soliton_residual(p, lam) < 1e-8
    assert p.kind == "soliton"
    # (phi')^2 - phi phi'' > 0
    assert np.all(p.phi1**2 - p.phi * p.phi2 > 0)


def test_gauge_is_phi_one_at_zero(make_soliton):
    p = make_soliton(2, 2.0)
    assert p.evaluate(0.0)[0] == pytest.approx(1.0, rel=1e-13)


def test_residual_detects_wrong_lambda(make_soliton):
    p = make_soliton(2, 2.0)
    res = soliton_residual(p, 2.1)
    assert res >= 0.09 * p.phi1.min()
    # the residual is exactly |0.1 phi'| pointwise
    assert res == pytest.approx(0.1 * p.phi1.max(), rel=1e-6)


def test_residual_detects_perturbed_second_derivative(make_soliton):
    p = make_soliton(2, 2.0)
    eps = 1e-3
    bent = RadialProfile(p.t, p.phi, p.phi1, p.phi2 + eps * p.phi1, p.phi3, p.n)
    assert soliton_residual(bent, 2.0) >= eps * (1 - 1e-6)


def test_phi_asymptotic_to_exponential(make_soliton):
    p = build_profile(SolitonParams(2, 2.0), phi_max=1e8)
    tail = p.t > p.t_max - 10
    scaled = p.phi[tail] * np.exp(-p.t[tail] / 2.0)
    assert np.ptp(scaled) / scaled.mean() < 1e-3


def test_gauge_covariance():
    params = SolitonParams(3, 1.5)
    a = build_profile(params)
    b = build_profile(params, gauge=2.5)
    np.testing.assert_allclose(b.t, a.t + 2.5, rtol=0, atol=1e-12)
    for name in ("phi", "phi1", "phi2", "phi3"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    shifted = a.with_gauge(2.5)
    np.testing.assert_allclose(shifted.evaluate(3.0), b.evaluate(3.0), rtol=1e-12)


def test_derivative_consistency_second_order():
    params = SolitonParams(2, 2.0)
    errs = []
    for nodes in (1000, 2000):
        p = build_profile(params, phi_min=1e-3, phi_max=100.0, node_count=nodes)
        t = p.t
        # non-uniform grid: central differences through np.gradient (second order)
        d2 = np.gradient(p.phi1, t, edge_order=2)
        d3 = np.gradient(p.phi2, t, edge_order=2)
        errs.append(max(np.max(np.abs(d2 - p.phi2) / p.phi), np.max(np.abs(d3 - p.phi3) / p.phi)))
    assert errs[1] < errs[0] / 3.5


def test_evaluate_between_nodes_exact(make_soliton):
    p = make_soliton(2, 4.0)
    t = np.linspace(p.t_min, p.t_max, 777)
    phi, p1, p2, p3 = p.evaluate(t)
    np.testing.assert_allclose(p1, ode_rhs(p.params, phi), rtol=1e-13)
    # t(phi) consistency: residual of the second-order equation off the nodes
    res = p2 / p1 + ((p.n - 1) / phi + 4.0) * p1 - p.n - phi
    assert np.max(np.abs(res)) < 1e-8


def test_evaluate_outside_span(make_soliton):
    p = make_soliton(2, 2.0)
    with pytest.raises(SpanError):
        p.evaluate(p.t_max + 1.0)
    with pytest.raises(ValueError):
        p.evaluate(0.0, order=5)


def test_flat_profile_exact():
    f = flat_profile(2)
    t = np.linspace(-5, 5, 31)
    for vals in f.evaluate(t, order=4):
        np.testing.assert_allclose(vals, np.exp(t), rtol=1e-13)
    assert f.kind == "custom"


def test_profile_validation():
    t = np.array([0.0, 1.0])
    with pytest.raises(ValueError):
        RadialProfile(t, np.array([1.0, -1.0]), np.ones(2), np.ones(2), np.ones(2), 1)
    with pytest.raises(ValueError):
        RadialProfile(np.array([1.0, 0.0]), np.ones(2), np.ones(2), np.ones(2), np.ones(2), 1)
    with pytest.raises(ValueError):
        RadialProfile(t, np.ones(3), np.ones(2), np.ones(2), np.ones(2), 1)


def test_profile_arrays_read_only(make_soliton):
    p = make_soliton(1, 2.0)
    with pytest.raises(ValueError):
        p.phi[0] = 2.0


def test_build_validation():
    params = SolitonParams(2, 2.0)
    with pytest.raises(ValueError):
        build_profile(params, phi_min=10.0, phi_max=1.0)
    with pytest.raises(ValueError):
        build_profile(params, node_count=8)
    with pytest.raises(SpanError):
        build_profile(params, phi_max=1e8, t_span_limit=5.0)


def test_quadrature_failure_surfaces(monkeypatch):
    import ksl.soliton as sol

    with pytest.raises(QuadratureError):
        sol.t_increments(SolitonParams(2, 2.0), [1e-3], [1e3], tol=1e-30, max_depth=3)
