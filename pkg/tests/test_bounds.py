import math

import numpy as np
import pytest
from scipy import special, stats

from ppvconverse.bounds import (
    BoundQuery,
    Status,
    closed_form_error,
    closed_form_rate,
    converse_error,
    converse_rate,
    excess_power_db,
    high_snr_excess,
    kappa_beta_rate,
    linear_excess_approx,
    normal_approx_error,
    normal_approx_rate,
    rate_approx,
    uncoded_error_n1,
)
from ppvconverse.temme_core import in_window

LOG2E = math.log2(math.e)


def capacity(omega):
    return 0.5 * math.log2(1.0 + omega)


# ---------------------------------------------------------------------------
# query validation


@pytest.mark.parametrize(
    "kw",
    [
        dict(n=0, omega=1.0, pe=1e-3),
        dict(n=2.5, omega=1.0, pe=1e-3),
        dict(n=10, omega=0.0, pe=1e-3),
        dict(n=10, omega=math.inf, pe=1e-3),
        dict(n=10, omega=1.0),
        dict(n=10, omega=1.0, pe=1e-3, rate=0.5),
        dict(n=10, omega=1.0, pe=0.5),
        dict(n=10, omega=1.0, pe=0.0),
        dict(n=10, omega=1.0, rate=0.05),
    ],
)
def test_query_rejects(kw):
    with pytest.raises(ValueError):
        BoundQuery(**kw)


def test_query_from_db():
    q = BoundQuery.from_db(100, 10.0, pe=1e-3)
    assert q.omega == pytest.approx(10.0, rel=1e-15)


def test_wrong_target_kind():
    with pytest.raises(ValueError):
        converse_rate(BoundQuery(100, 1.0, rate=0.3))
    with pytest.raises(ValueError):
        converse_error(BoundQuery(100, 1.0, pe=1e-3))


# ---------------------------------------------------------------------------
# converse rate and error


def test_capacity_limit():
    r = converse_rate(BoundQuery(10_000_000, 1.0, pe=1e-5), certify=False).value
    assert 0.495 <= r <= 0.5


def test_rate_increasing_in_pe():
    r = [converse_rate(BoundQuery(500, 1.0, pe=p), certify=False).value for p in (1e-5, 1e-3)]
    assert r[1] >= r[0]


def test_rate_increasing_in_n():
    r = [converse_rate(BoundQuery(n, 1.0, pe=1e-5), certify=False).value for n in (100, 1000, 10_000)]
    assert np.all(np.diff(r) > 0)


@pytest.mark.parametrize("n", [10, 100, 1000, 100_000])
@pytest.mark.parametrize("omega", [0.1, 1.0, 100.0])
def test_rate_below_capacity(n, omega):
    res = converse_rate(BoundQuery(n, omega, pe=1e-5), certify=False)
    assert 0.0 <= res.value <= capacity(omega)
    assert res.spectral_efficiency == 2.0 * res.value


def test_duality():
    r = converse_rate(BoundQuery(200, 1.0, pe=1e-5))
    e = converse_error(BoundQuery(200, 1.0, rate=r.value))
    assert abs(e.value.log_value - math.log(1e-5)) <= 1e-8 * abs(math.log(1e-5))
    assert e.gamma_star == pytest.approx(r.gamma_star, rel=1e-8)


def test_below_floor():
    res = converse_rate(BoundQuery(10, 0.01, pe=1e-5))
    assert res.status is Status.BELOW_FLOOR
    assert res.value == 0.0
    assert res.certified_bracket is None


def test_error_decreasing_in_snr():
    logs = [converse_error(BoundQuery(1000, 10 ** (x / 10), rate=0.5)).value.log_value for x in range(-1, 5)]
    assert np.all(np.diff(logs) < 0)


def test_solved_threshold_in_window():
    q = BoundQuery(1000, 1.0, pe=1e-5)
    res = converse_rate(q)
    assert res.status is Status.OK
    assert in_window(res.gamma_star, q.params)


def test_uncoded_reference():
    assert uncoded_error_n1(1.0) == pytest.approx(stats.norm.sf(1.0), rel=1e-14)
    assert uncoded_error_n1(4.0) == pytest.approx(stats.norm.sf(2.0), rel=1e-14)


# ---------------------------------------------------------------------------
# certified brackets and closed forms


@pytest.mark.parametrize("n", [100, 1000, 10_000])
@pytest.mark.parametrize("omega", [0.5, 1.0, 4.0])
def test_certified_rate_bracket(n, omega):
    q = BoundQuery(n, omega, pe=1e-5)
    res = converse_rate(q)
    assert res.certified
    r1, r2 = res.certified_bracket
    assert r1 <= res.value <= r2
    assert closed_form_rate(q, 1, gamma_ref=res.gamma_star) == r1


@pytest.mark.parametrize("n", [100, 1000])
@pytest.mark.parametrize("snr_db", [0.0, 2.0, 4.0])
def test_certified_error_bracket(n, snr_db):
    q = BoundQuery.from_db(n, snr_db, rate=0.5)
    res = converse_error(q)
    if not res.certified:
        pytest.skip("no certificate at this point")
    p2, p1 = res.certified_bracket
    lp = res.value.log_value
    assert p2 <= lp + 1e-12 * abs(lp)
    assert lp <= p1 + 1e-12 * abs(lp)


@pytest.mark.parametrize("n", [10, 100, 1000])
@pytest.mark.parametrize("snr_db", [-2.0, 0.0, 2.0, 6.0])
def test_one_term_error_above_converse(n, snr_db):
    q = BoundQuery.from_db(n, snr_db, rate=0.5)
    res = converse_error(q)
    if res.status is not Status.OK:
        pytest.skip("threshold outside the validity window")
    p1 = closed_form_error(q, 1, gamma_ref=res.gamma_star)
    assert p1 is not None
    assert res.value.log_value <= p1 + 1e-12 * abs(p1)


@pytest.mark.parametrize("n", [100, 1000, 10_000])
@pytest.mark.parametrize("omega", [0.5, 1.0, 10.0])
def test_one_term_rate_below_converse(n, omega):
    q = BoundQuery(n, omega, pe=1e-5)
    res = converse_rate(q, certify=False)
    assert res.status is Status.OK
    assert closed_form_rate(q, 1, gamma_ref=res.gamma_star) <= res.value


# ---------------------------------------------------------------------------
# normal approximation and achievability


def test_normal_approx_formula():
    n, om, pe = 2000, 1.0, 1e-3
    disp = om * (2 + om) / (2 * n * (1 + om) ** 2)
    ref = capacity(om) - LOG2E * stats.norm.isf(pe) * math.sqrt(disp) + math.log2(n) / (2 * n)
    assert normal_approx_rate(BoundQuery(n, om, pe=pe)) == pytest.approx(ref, rel=1e-13)


def test_normal_approx_at_half():
    n, om = 500, 2.0
    rate = capacity(om) + math.log2(n) / (2 * n)
    assert normal_approx_error(n, om, rate) == pytest.approx(0.5, rel=1e-15)
    assert normal_approx_rate(BoundQuery(n, om, pe=0.5 - 1e-12)) == pytest.approx(rate, abs=1e-10)


@pytest.mark.parametrize("pe", [1e-5, 1e-3])
def test_normal_approx_roundtrip(pe):
    q = BoundQuery(1000, 1.0, pe=pe)
    assert normal_approx_error(1000, 1.0, normal_approx_rate(q)) == pytest.approx(pe, rel=1e-9)


@pytest.mark.parametrize("n", [100, 1000, 10_000])
def test_normal_approx_below_converse(n):
    q = BoundQuery(n, 1.0, pe=1e-5)
    assert normal_approx_rate(q) <= converse_rate(q, certify=False).value


def test_kappa_beta_below_converse_and_gap_shrinks():
    gaps = []
    for n in (1000, 10_000, 100_000):
        q = BoundQuery(n, 1.0, pe=1e-5)
        kb = kappa_beta_rate(q)
        r = converse_rate(q, certify=False).value
        assert kb <= r
        gaps.append(r - kb)
    assert gaps[0] > gaps[1] > gaps[2] > 0


def test_kappa_beta_stable_under_grid_refinement():
    # the objective tends to -inf as alpha -> 0, so the optimum is interior and grid independent
    q = BoundQuery(200, 1.0, pe=1e-3)
    best = kappa_beta_rate(q)
    assert math.isfinite(best)
    assert kappa_beta_rate(q, grid=48) == pytest.approx(best, abs=1e-7)


# ---------------------------------------------------------------------------
# excess power and high-SNR limits


def test_excess_power_zero_at_capacity():
    # substituting R = C into the gap formula gives exactly 0 dB
    om = 3.0
    assert 10 * math.log10(om) - 10 * math.log10(math.expm1(2 * capacity(om) / LOG2E)) == pytest.approx(0.0, abs=1e-14)


def test_excess_power_decreasing_in_n():
    d = [excess_power_db(n, 1e-5, 1.0) for n in (100, 1000, 10_000, 100_000)]
    assert np.all(np.diff(d) < 0)
    assert d[-1] > 0.1


def test_excess_power_crosses_tenth_db():
    assert excess_power_db(100_000, 1e-5, 1.0) > 0.1 > excess_power_db(1_000_000, 1e-5, 1.0)


def test_excess_power_nan_below_floor():
    assert math.isnan(excess_power_db(10, 1e-5, 0.01))


@pytest.mark.parametrize("n", [100, 1000, 10_000])
def test_high_snr_matches_40db(n):
    assert high_snr_excess(n, 1e-5)[0] == pytest.approx(excess_power_db(n, 1e-5, 1e4), abs=0.02)


def test_high_snr_lambda_solves_constraint():
    n, pe = 500, 1e-4
    _, _, lam = high_snr_excess(n, pe)
    assert lam > 1
    # scaled tail q(x) = Q(x) exp(x^2 / 2) = erfcx(x / sqrt 2) / 2
    q = 0.5 * special.erfcx(math.sqrt(n / 2) * (lam - 1) / math.sqrt(2))
    lhs = q * math.exp(-n * (lam - 1 - math.log(lam)) / 2)
    assert lhs == pytest.approx(pe, rel=1e-9)


def test_high_snr_rejects_bad_pe():
    with pytest.raises(ValueError):
        high_snr_excess(100, 0.5)


def test_linear_approximation():
    d = high_snr_excess(100_000, 1e-5)[0]
    assert linear_excess_approx(100_000, 1e-5) == pytest.approx(d, rel=0.05)
    ref = 10 * math.log10(math.e) * math.sqrt(2 / 1000) * stats.norm.isf(1e-5)
    assert linear_excess_approx(1000, 1e-5) == pytest.approx(ref, rel=1e-12)
    assert linear_excess_approx(1000, 0.5 - 1e-15) == pytest.approx(0.0, abs=1e-12)


def test_rate_offset_large_n():
    n, pe = 100_000, 1e-5
    off = high_snr_excess(n, pe)[1]
    assert off == pytest.approx(LOG2E * stats.norm.isf(pe) * math.sqrt(0.5 / n), rel=0.02)


@pytest.mark.parametrize("n", [100, 1000])
def test_rate_offset_against_converse_at_high_snr(n):
    off = high_snr_excess(n, 1e-5)[1]
    r = converse_rate(BoundQuery(n, 1e6, pe=1e-5), certify=False).value
    assert r == pytest.approx(0.5 * math.log2(1e6) - off, abs=1e-3)


def test_rate_approx_is_high_snr_normal_approx():
    n, pe, om = 1000, 1e-4, 1e8
    na = normal_approx_rate(BoundQuery(n, om, pe=pe)) - math.log2(n) / (2 * n)
    assert rate_approx(n, pe, om) == pytest.approx(na, abs=1e-9)


def test_one_term_error_vacuous_near_pole():
    # at n = 10, -3 dB the one-term rate stays below 1/2 up to the window edge
    q = BoundQuery.from_db(10, -3.0, rate=0.5)
    res = converse_error(q)
    assert res.status is Status.OK
    assert closed_form_error(q, 1, gamma_ref=res.gamma_star) == math.inf
