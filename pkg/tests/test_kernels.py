import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ksl.kernels import (
    SWITCH_OFFSET,
    _f_closed,
    _f_series,
    eval_L,
    eval_L_scaled,
    eval_f,
    eval_g,
    eval_h,
    eval_l,
    fd_derivative,
    fd_weights,
    kernel_identity_report,
)

mp.mp.dps = 60


def f_oracle(k, x):
    """Tail of the exponential series in 60-digit arithmetic."""
    x = mp.mpf(x)
    head = mp.fsum((-x) ** j / mp.factorial(j) for j in range(k))
    return (-1) ** k * (mp.exp(-x) - head)


@pytest.mark.parametrize("k", range(0, 8))
@pytest.mark.parametrize("x", [0.0, 1e-8, 0.3, 1.0, 5.0, 12.0, 17.5, 30.0, 80.0, 100.0])
def test_f_matches_high_precision(k, x):
    got = eval_f(k, x)
    ref = float(f_oracle(k, x))
    if ref == 0.0:
        assert got == 0.0
    else:
        assert got == pytest.approx(ref, rel=1e-13)


def test_f_small_values():
    assert eval_f(0, 0.0) == 1.0
    assert eval_f(3, 0.0) == 0.0
    # f_k(x) ~ x^k / k! for small x
    assert eval_f(2, 1e-5) == pytest.approx(0.5e-10, rel=1e-5)


@pytest.mark.parametrize("k", range(1, 9))
def test_routes_agree_near_switch(k):
    x = np.linspace(k + SWITCH_OFFSET - 3, k + SWITCH_OFFSET + 3, 41)
    series = _f_series(k, x)
    closed = _f_closed(k, x)
    np.testing.assert_allclose(series, closed, rtol=1e-10)


@given(k=st.integers(0, 10), x=st.floats(0.0, 60.0))
@settings(max_examples=200, deadline=None)
def test_recurrence(k, x):
    lhs = eval_f(k, x)
    rhs = x**k / math.factorial(k) - eval_f(k + 1, x)
    # relative to the larger of the two terms, which the identity subtracts
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), x**k / math.factorial(k))


@given(k=st.integers(1, 6), x=st.floats(1e-3, 50.0))
@settings(max_examples=200, deadline=None)
def test_signs(k, x):
    assert eval_f(k, x) > 0
    assert eval_g(k, x) < 0
    assert eval_h(k, x) < 0


def test_vectorized_shapes():
    x = np.linspace(0, 10, 12).reshape(3, 4)
    for func in (eval_f, eval_g, eval_h):
        assert np.shape(func(2, x)) == (3, 4)
    assert isinstance(eval_f(2, 1.0), float)


def test_g_closed_form_and_base_case():
    x = np.linspace(0.1, 40, 50)
    np.testing.assert_allclose(eval_g(1, x), -x * np.exp(-x), rtol=1e-14)
    # 2 h_1 = 2 x^2 (-e^{-x})
    np.testing.assert_allclose(eval_h(1, x), -(x**2) * np.exp(-x), rtol=1e-14)
    k, x0 = 3, 2.5
    direct = (k - 1 + x0) * math.factorial(k - 1) * float(f_oracle(k, x0)) - x0**k
    assert eval_g(k, x0) == pytest.approx(direct, rel=1e-12)


def test_h_uses_matching_power():
    k, x = 3, 1.7
    shift = k - 1 + x
    ref = (k - 1 + shift**2) * math.factorial(k) * float(f_oracle(k, x)) - k * shift * x**k
    assert eval_h(k, x) == pytest.approx(ref, rel=1e-12)


def test_l_examples():
    assert eval_l(2, 0.0) == 0.0
    x = np.linspace(0.1, 50, 300)
    assert np.all(eval_l(2, x) > 0)
    n, x0 = 3, 2.0
    f = f_oracle(n, x0)
    ref = mp.factorial(n - 1) * f * ((2 - 2 * n) * x0 - x0**2 - n * (n - 1)) + mp.mpf(x0) ** (n + 1) + (n - 1) * mp.mpf(x0) ** n
    assert eval_l(n, x0) == pytest.approx(float(ref), rel=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_l_vanishes_to_order_n_at_zero(n):
    # one-sided differences at 0 of l, l', ..., l^{(n-1)}
    for order in range(n):
        approx = fd_derivative(lambda t: np.asarray(eval_l(n, t)), [0.0], order, 1e-2, accuracy=4)[0] if order else eval_l(n, 0.0)
        assert abs(approx) < 1e-5


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_L_positive(n):
    x = np.linspace(1e-3, 50, 400)
    assert np.all(eval_L_scaled(n, x) > 0)
    val = eval_L(n, x)
    assert np.all(val.value > 0)


def test_L_zero_and_direct():
    assert eval_L(2, 0.0).value == 0.0
    x = 1.0
    big_f = math.factorial(1) * float(f_oracle(2, x))
    ref = big_f**2 - big_f * (x**2 + 2 * x) + x**3
    assert eval_L_scaled(2, x) == pytest.approx(ref, rel=1e-12)
    assert eval_L(2, x).value == pytest.approx(ref * math.exp(2 * x), rel=1e-12)


def test_L_scaled_flag():
    out = eval_L(3, np.array([1.0, 400.0]))
    assert list(out.scaled) == [False, True]
    assert out.value[1] == pytest.approx(eval_L_scaled(3, 400.0))
    single = eval_L(2, 500.0)
    assert single.scaled is True


@pytest.mark.parametrize("bad", [-1.0, float("nan"), float("inf")])
def test_argument_validation(bad):
    with pytest.raises(ValueError):
        eval_f(2, bad)


def test_order_validation():
    with pytest.raises(ValueError):
        eval_f(-1, 1.0)
    with pytest.raises(ValueError):
        eval_f(40, 1.0)
    with pytest.raises(TypeError):
        eval_f(2.0, 1.0)
    with pytest.raises(ValueError):
        eval_g(0, 1.0)


def test_fd_weights_reproduce_polynomials():
    w = fd_weights(np.arange(-2, 3), 2)
    pts = np.arange(-2, 3, dtype=float)
    assert w @ pts**2 == pytest.approx(2.0)
    assert w @ pts**3 == pytest.approx(0.0, abs=1e-12)


def test_identity_report_examples():
    rep = kernel_identity_report(2, np.linspace(0, 10, 100))
    assert rep.passed(1e-6)
    rep = kernel_identity_report(4, np.linspace(0, 40, 50))
    assert rep.passed(1e-5)
    rep = kernel_identity_report(1, [0.0])
    assert rep.residuals["f"] < 1e-8


@pytest.mark.parametrize("n", range(1, 6))
def test_identity_report_wide_grid(n):
    rep = kernel_identity_report(n, np.linspace(0, 50, 200))
    assert rep.worst < 1e-5


def test_identity_report_validation():
    with pytest.raises(ValueError):
        kernel_identity_report(2, [3.0, 1.0])
    with pytest.raises(ValueError):
        kernel_identity_report(2, [1.0, 150.0])
    with pytest.raises(ValueError):
        kernel_identity_report(2, [])
