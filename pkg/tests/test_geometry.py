import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ksl.geometry import (
    DecayReport,
    InsufficientSpanError,
    asymptotic_volume_constant,
    decay_report,
    distance_adaptive,
    distance_at,
    distance_profile,
    sphere_area,
    volume_of_ball,
)
from ksl.soliton import SolitonParams, build_profile, flat_profile


def far_soliton(n, lam):
    return build_profile(SolitonParams(n, lam), phi_max=1e8)


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2 * math.pi)
    assert sphere_area(2) == pytest.approx(2 * math.pi**2)
    assert sphere_area(3) == pytest.approx(math.pi**3)


def test_flat_distance_is_euclidean(flat2):
    t, d = distance_profile(flat2)
    np.testing.assert_allclose(d, np.exp(t / 2), rtol=1e-10)
    assert distance_at(flat2, 1.3) == pytest.approx(math.exp(0.65), rel=1e-10)


@pytest.mark.parametrize("n", [1, 2])
def test_flat_ball_volume(n):
    p = flat_profile(n)
    r = 1.7
    expected = math.pi * r**2 if n == 1 else math.pi**2 * r**4 / 2
    assert volume_of_ball(p, 2 * math.log(r)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("n, lam", [(1, 2.0), (2, 2.0), (3, 4.0)])
def test_distance_grows_like_sqrt_lam_phi(n, lam):
    p = far_soliton(n, lam)
    _, d = distance_profile(p)
    ratio = d / np.sqrt(lam * p.phi)
    assert ratio[-1] == pytest.approx(1.0, abs=2e-4)
    # the approach is monotone in the far field
    tail = ratio[p.phi > 1e4]
    assert np.all(np.abs(np.diff(tail)) >= 0) and abs(tail[-1] - 1) < abs(tail[0] - 1)


@pytest.mark.parametrize("n, lam", [(1, 2.0), (2, 1.5), (4, 4.0)])
def test_two_quadratures_agree(make_soliton, n, lam):
    p = make_soliton(n, lam)
    for t in np.linspace(p.t_min + 0.1, p.t_max, 5):
        assert distance_adaptive(p, t) == pytest.approx(distance_at(p, t), rel=1e-8)


def test_volume_derivative_matches_area(make_soliton):
    # dVol/dd equals the area of the distance sphere, (omega) phi^{n-1} sqrt(phi') ... times phi'/sqrt(phi')
    n = 2
    p = make_soliton(n, 2.0)
    t, d = distance_profile(p)
    vol = volume_of_ball(p, t)
    dv_dt = sphere_area(n) / 2 * p.phi ** (n - 1) * p.phi1
    dd_dt = 0.5 * np.sqrt(p.phi1)
    dv_dd = np.gradient(vol, d)
    inner = slice(50, -50)
    np.testing.assert_allclose(dv_dd[inner], (dv_dt / dd_dt)[inner], rtol=1e-3)


def test_flat_decay_report():
    p = flat_profile(2, t_min=-10, t_max=10)
    r = decay_report(p)
    assert isinstance(r, DecayReport)
    assert np.all(r["R"] == pytest.approx(0.0, abs=1e-12))
    np.testing.assert_allclose(r["vol_ratio"], sphere_area(2) / 4, rtol=1e-9)
    assert r.constants["C_hat"] == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("n, lam", [(1, 2.0), (2, 2.0), (3, 4.0)])
def test_soliton_volume_ratio(n, lam):
    p = far_soliton(n, lam)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        r = decay_report(p)
    ratio = r["vol_ratio"]
    assert np.all(np.diff(ratio) <= 1e-9 * ratio[:-1])
    # starts at the Euclidean value, settles at omega/(2n lam^n)
    assert ratio[0] == pytest.approx(sphere_area(n) / (2 * n), rel=1e-4)
    assert r.constants["c1_hat"] == pytest.approx(asymptotic_volume_constant(n, lam), rel=1e-3)
    assert r.constants["c1_hat"] > 0


@pytest.mark.parametrize("n, lam", [(2, 2.0), (3, 1.5)])
def test_average_curvature_bound(n, lam):
    r = decay_report(far_soliton(n, lam))
    d = r["d"]
    last = d >= d[-1] / 10
    scaled = r["avgR_scaled"][last]
    assert np.all(scaled > 0)
    # bounded: no growth over the last decade of distance
    assert scaled.max() <= 1.1 * scaled[0]
    assert r.constants["C_hat"] >= scaled.max()


def test_rows_carry_every_column(make_soliton):
    r = decay_report(make_soliton(2, 2.0))
    row = next(r.rows())
    assert tuple(row) == DecayReport.COLUMNS
    assert len(list(r.rows())) == len(r)


def test_insufficient_span(flat2):
    short = flat_profile(2, t_min=-1, t_max=1)
    with pytest.raises(InsufficientSpanError):
        decay_report(short)


def test_distance_outside_span(make_soliton):
    p = make_soliton(2, 2.0)
    with pytest.raises(ValueError):
        distance_at(p, p.t_max + 1)


@given(t1=st.floats(-10, 10), t2=st.floats(-10, 10))
@settings(max_examples=50, deadline=None)
def test_distance_and_volume_increase(t1, t2):
    from tests.conftest import soliton

    p = soliton(2, 2.0)
    lo, hi = sorted((t1, t2))
    if hi - lo < 1e-6:
        return
    assert distance_at(p, lo) < distance_at(p, hi)
    assert volume_of_ball(p, lo) < volume_of_ball(p, hi)
