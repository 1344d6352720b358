import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppvconverse.errors import OracleRangeError, PoleError, WindowError
from ppvconverse.series_engine import g0, g1
from ppvconverse.specfun import chi2_noncentral_cdf_oracle
from ppvconverse.temme_core import (
    ChannelParams,
    Kind,
    alpha,
    g_integral,
    in_window,
    kind_geometry,
    log_prob,
    log_prob_integral,
    log_prob_oracle,
    log_prob_series,
    make_threshold,
    path_arrays,
    path_point,
    threshold_from_lambda_prime,
    validity_window,
)


def interior(params, count=5):
    lo, hi = validity_window(params)
    return lo + (hi - lo) * np.arange(1, count + 1) / (count + 1)


# ---------------------------------------------------------------------------
# threshold maps


def test_channel_params():
    p = ChannelParams(3.0)
    assert p.gamma_bar == pytest.approx(math.log(2.0) * p.capacity_bits, rel=1e-15)
    assert ChannelParams.from_db(0.0).omega == 1.0
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            ChannelParams(bad)


def test_lambda_prime_at_capacity_threshold():
    p = ChannelParams(1.0)
    g = make_threshold(p.gamma_bar, p)
    assert g.s_gamma == pytest.approx(1.0 / (2.0 * math.sqrt(2.0)), rel=1e-15)
    assert g.lambda_prime == pytest.approx(2.0, rel=1e-14)


def test_lambda_prime_direct():
    g = make_threshold(0.5, ChannelParams(1.0))
    assert g.lambda_prime == pytest.approx(1.0 / (4.0 * math.sinh(0.5) ** 2), rel=1e-15)


@pytest.mark.parametrize("gamma", [1e-3, 0.1, 0.5, 2.0, 10.0])
@pytest.mark.parametrize("omega", [0.1, 1.0, 100.0])
def test_threshold_roundtrip_and_identity(gamma, omega):
    p = ChannelParams(omega)
    g = make_threshold(gamma, p)
    # relative to the size of the squares, which is where the cancellation sits
    assert abs(g.c_gamma**2 - g.s_gamma**2 - 1.0) <= 1e-12 * g.c_gamma**2
    assert g.t_gamma == pytest.approx(g.s_gamma / g.c_gamma, rel=1e-15)
    assert threshold_from_lambda_prime(g.lambda_prime, p).gamma == pytest.approx(gamma, rel=1e-12)


def test_make_threshold_rejects_nonpositive():
    with pytest.raises(ValueError):
        make_threshold(0.0, ChannelParams(1.0))


def test_alpha_examples():
    g = make_threshold(0.4, ChannelParams(1.0))
    assert alpha(0.4, g) == 0.0
    for d in (0.1, 1.0):
        assert alpha(0.4 + d, g) < 0
        assert alpha(0.4 - d, g) < 0
    # Taylor series about gamma: -sum_{k>=2} (c if k even else s) d^k / k!
    d = 0.01
    taylor = -sum((g.c_gamma if k % 2 == 0 else g.s_gamma) * d**k / math.factorial(k) for k in range(2, 12))
    assert alpha(0.41, g) == pytest.approx(taylor, rel=1e-7)
    assert alpha(0.41, g) == pytest.approx(-0.5 * g.c_gamma * 1e-4, rel=2e-2)


@pytest.mark.parametrize("x", [0.39, 0.4 + 1e-6, 0.9, 3.0])
def test_alpha_direct_formula_agrees(x):
    g = make_threshold(0.4, ChannelParams(1.0))
    direct = g.c_gamma - math.cosh(x) + g.s_gamma * (x - 0.4)
    assert alpha(x, g) == pytest.approx(direct, rel=1e-6, abs=1e-15)


# ---------------------------------------------------------------------------
# exponents and window


@pytest.mark.parametrize("omega", [0.5, 1.0, 4.0])
def test_kind_geometry_at_gamma_bar(omega):
    p = ChannelParams(omega)
    g = make_threshold(p.gamma_bar, p)
    md = kind_geometry(g, p, Kind.MD)
    fa = kind_geometry(g, p, Kind.FA)
    assert md.theta == pytest.approx(p.gamma_bar, abs=1e-14)
    assert md.v == pytest.approx(0.0, abs=1e-14)
    assert fa.theta == pytest.approx(-p.gamma_bar, rel=1e-13)
    assert fa.v == pytest.approx(math.log1p(omega), rel=1e-12)


@pytest.mark.parametrize("omega", [0.1, 1.0, 10.0])
def test_step_signs_inside_window(omega):
    p = ChannelParams(omega)
    for gam in interior(p, 9):
        g = make_threshold(gam, p)
        assert kind_geometry(g, p, Kind.MD).step_sign == -1
        assert kind_geometry(g, p, Kind.FA).step_sign == 1


def test_validity_window():
    lo, hi = validity_window(ChannelParams(1.0))
    assert lo == pytest.approx(0.5 * math.log(1.5), rel=1e-15)
    assert hi == pytest.approx(0.5 * math.log(2.0), rel=1e-15)
    assert hi == ChannelParams(1.0).gamma_bar
    lo, hi = validity_window(ChannelParams(1e-9))
    assert hi - lo < 1e-17
    assert not in_window(hi, ChannelParams(1.0))
    assert not in_window(lo, ChannelParams(1.0))


@pytest.mark.parametrize("omega", [0.25, 1.0, 4.0])
def test_window_edges_are_poles(omega):
    p = ChannelParams(omega)
    lo, hi = validity_window(p)
    assert kind_geometry(make_threshold(hi, p), p, Kind.MD).pole_distance == pytest.approx(0.0, abs=1e-14)
    assert kind_geometry(make_threshold(lo, p), p, Kind.FA).pole_distance == pytest.approx(0.0, abs=1e-14)


# ---------------------------------------------------------------------------
# descent path


def test_path_point_at_origin():
    p = ChannelParams(1.0)
    g = make_threshold(0.3, p)
    kg = kind_geometry(g, p, Kind.MD)
    pt = path_point(0.0, g, kg)
    assert pt.r == 0.3
    assert pt.h == 0.0 and pt.u == 0.0
    assert pt.g_tilde == pytest.approx(1.0 / math.expm1(kg.theta - 0.3), rel=1e-15)
    c0 = 1.0 / (math.sqrt(g.c_gamma) * kg.pole_distance)
    assert pt.c_of_phi / c0 == pytest.approx(1.0, rel=1e-15)
    # continuity into the removable limit
    near = path_point(1e-7, g, kg)
    assert near.c_of_phi / c0 == pytest.approx(1.0, rel=1e-10)
    with pytest.raises(ValueError):
        path_point(math.pi, g, kg)


@pytest.mark.parametrize("phi", [0.3, math.pi / 2, 2.5])
@pytest.mark.parametrize("gamma", [0.05, 0.5, 2.0])
def test_path_against_complex_definition(phi, gamma):
    p = ChannelParams(1.0)
    g = make_threshold(gamma, p)
    kg = kind_geometry(g, p, Kind.FA)
    pt = path_point(phi, g, kg)
    z = complex(pt.r, phi)
    a = g.c_gamma - cmath.cosh(z) + g.s_gamma * (z - gamma)
    # on the steepest-descent path alpha(r + i phi) is real and equals h
    assert abs(a.imag) <= 1e-12 * max(1.0, abs(a))
    assert pt.h == pytest.approx(a.real, rel=1e-10)
    assert pt.u == pytest.approx(math.sqrt(2.0 * a.real), rel=1e-10)


@pytest.mark.parametrize("gamma", [0.01, 0.5, 3.0])
def test_h_nonnegative_nondecreasing(gamma):
    p = ChannelParams(1.0)
    g = make_threshold(gamma, p)
    kg = kind_geometry(g, p, Kind.MD)
    phi = np.linspace(0.0, math.pi * (1 - 1e-9), 4001)
    h = path_arrays(phi, g, kg)["h"]
    assert h[0] == 0.0
    assert np.all(h >= 0.0)
    assert np.all(np.diff(h) >= -1e-15 * np.maximum(h[1:], 1.0))


# ---------------------------------------------------------------------------
# integral and probabilities


@pytest.mark.parametrize("n", [4, 64, 1000])
@pytest.mark.parametrize("omega", [0.25, 1.0, 4.0])
def test_integral_signs(n, omega):
    p = ChannelParams(omega)
    for gam in interior(p):
        g = make_threshold(gam, p)
        assert g_integral(g, kind_geometry(g, p, Kind.MD), n).value > 0
        assert g_integral(g, kind_geometry(g, p, Kind.FA), n).value < 0


@pytest.mark.parametrize("kind", list(Kind))
def test_integral_leading_order(kind):
    p = ChannelParams(1.0)
    n = 1_000_000
    for gam in interior(p, 3):
        g = make_threshold(gam, p)
        kg = kind_geometry(g, p, kind)
        val = g_integral(g, kg, n).value * math.sqrt(n)
        assert val / g0(g, kg) == pytest.approx(1.0, abs=3.0 * abs(g1(g, kg)) / n + 1e-12)


@pytest.mark.parametrize("kind", list(Kind))
def test_integral_node_doubling(kind):
    p = ChannelParams(1.0)
    for gam in interior(p):
        g = make_threshold(gam, p)
        kg = kind_geometry(g, p, kind)
        a = g_integral(g, kg, 200).value
        b = g_integral(g, kg, 200, order=32).value
        assert a == pytest.approx(b, rel=1e-10)


def test_oracle_path_is_the_chi2_tail():
    p = ChannelParams(1.0)
    g = make_threshold(0.3, p)
    n = 8
    ref = chi2_noncentral_cdf_oracle(n * g.lambda_prime, n, n / 1.0, upper=True)
    assert log_prob(g, p, Kind.MD, n, "oracle").log_value == ref.log_value
    ref = chi2_noncentral_cdf_oracle(n * g.lambda_prime / 2.0, n, n * 2.0, upper=False)
    assert log_prob(g, p, Kind.FA, n, "oracle").log_value == ref.log_value


@pytest.mark.parametrize("n", [4, 8, 16, 64, 256])
@pytest.mark.parametrize("omega", [0.25, 1.0, 4.0])
@pytest.mark.parametrize("kind", list(Kind))
def test_integral_matches_oracle(n, omega, kind):
    p = ChannelParams(omega)
    for gam in interior(p):
        g = make_threshold(gam, p)
        a = log_prob_integral(g, p, kind, n).log_value
        b = log_prob_oracle(g, p, kind, n).log_value
        assert abs(a - b) <= 1e-8 * max(1.0, abs(b))


@pytest.mark.parametrize("omega", [0.25, 1.0, 4.0])
@pytest.mark.parametrize("kind", list(Kind))
def test_integral_matches_oracle_outside_window(omega, kind):
    p = ChannelParams(omega)
    lo, hi = validity_window(p)
    for gam in (0.3 * lo, 0.9 * lo, 1.1 * hi, 2.0 * hi):
        g = make_threshold(gam, p)
        for n in (16, 256):
            a = log_prob_integral(g, p, kind, n).log_value
            b = log_prob_oracle(g, p, kind, n).log_value
            assert a == pytest.approx(b, rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("omega", [0.25, 1.0, 4.0])
def test_probabilities_below_half_inside_window(omega):
    p = ChannelParams(omega)
    for n in (16, 256):
        for gam in interior(p, 7):
            g = make_threshold(gam, p)
            assert log_prob_oracle(g, p, Kind.MD, n).value < 0.5
            assert log_prob_oracle(g, p, Kind.FA, n).value < 0.5


@pytest.mark.parametrize("omega", [0.5, 1.0, 4.0])
def test_probabilities_monotone_in_gamma(omega):
    p = ChannelParams(omega)
    lo, hi = validity_window(p)
    gams = np.linspace(0.5 * lo, 1.5 * hi, 25)
    md = [log_prob_oracle(make_threshold(x, p), p, Kind.MD, 32).log_value for x in gams]
    fa = [log_prob_oracle(make_threshold(x, p), p, Kind.FA, 32).log_value for x in gams]
    # strict where the probabilities are resolvable, i.e. away from P = 1
    assert np.all(np.diff(md) > 0)
    assert np.all(np.diff(fa) <= 1e-13)
    inside = (gams[1:] > lo) & (gams[:-1] < hi)
    assert np.all(np.diff(fa)[inside] < 0)


def test_method_errors():
    p = ChannelParams(1.0)
    g = make_threshold(0.3, p)
    with pytest.raises(OracleRangeError):
        log_prob_oracle(g, p, Kind.MD, 1000)
    with pytest.raises(WindowError):
        log_prob_series(make_threshold(0.01, p), p, Kind.MD, 1000)
    with pytest.raises(ValueError):
        log_prob(g, p, Kind.MD, 100, "magic")
    lo, hi = validity_window(p)
    with pytest.raises(PoleError):
        log_prob_integral(make_threshold(hi, p), p, Kind.MD, 100)


def test_auto_policy_labels():
    p = ChannelParams(1.0)
    g = make_threshold(float(interior(p, 3)[1]), p)
    assert log_prob(g, p, Kind.MD, 32).method == "oracle"
    assert log_prob(g, p, Kind.MD, 1000).method == "integral"
    assert log_prob(g, p, Kind.MD, 100_000).method == "series"
    out = make_threshold(0.01, p)
    assert log_prob(out, p, Kind.MD, 300).method == "oracle"
    assert log_prob(out, p, Kind.MD, 100_000).method == "integral"


@settings(max_examples=40, deadline=None)
@given(
    omega=st.floats(0.1, 20.0),
    frac=st.floats(0.02, 0.98),
    n=st.integers(64, 512),
    kind=st.sampled_from(list(Kind)),
)
def test_auto_agrees_with_oracle(omega, frac, n, kind):
    p = ChannelParams(omega)
    lo, hi = validity_window(p)
    g = make_threshold(lo + frac * (hi - lo), p)
    a = log_prob(g, p, kind, n).log_value
    b = log_prob_oracle(g, p, kind, n).log_value
    assert a == pytest.approx(b, rel=1e-8, abs=1e-10)
