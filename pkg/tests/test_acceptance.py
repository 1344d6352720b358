"""Acceptance criteria, one test and one PASS/FAIL line each."""

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from ppvconverse import bounds
from ppvconverse.bounds import BoundQuery, Status
from ppvconverse.certify import bbar_bound, c_ratio_profile, certification_grid, certify_sandwich, dm8_bracket
from ppvconverse.series_engine import build_coefficients, g1, g_series
from ppvconverse.specfun import chi2_noncentral_log_cdf_ccdf
from ppvconverse.temme_core import (
    ChannelParams,
    Kind,
    g_integral,
    kind_geometry,
    log_prob_integral,
    log_prob_oracle,
    make_threshold,
    validity_window,
)

GRID_N = (4, 8, 16, 64, 256)
GRID_OMEGA = (0.25, 1.0, 4.0)
EBN0_LIMIT_DB = 10 * math.log10(math.log(2))
EPS = np.finfo(float).eps


def report(number, name, ok, detail):
    line = f"criterion {number} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def interior_gammas(params, count=5):
    lo, hi = validity_window(params)
    return lo + (hi - lo) * np.arange(1, count + 1) / (count + 1)


def grid_points(min_n=1):
    for n in GRID_N:
        if n < min_n:
            continue
        for om in GRID_OMEGA:
            p = ChannelParams(om)
            for gam in interior_gammas(p):
                for kind in Kind:
                    yield n, p, make_threshold(gam, p), kind


def test_criterion_1_oracle_equivalence():
    worst, count = 0.0, 0
    for n, p, g, kind in grid_points():
        err = abs(log_prob_integral(g, p, kind, n).log_value - log_prob_oracle(g, p, kind, n).log_value)
        worst = max(worst, err) if not math.isnan(err) else math.inf
        count += 1
    report(1, "oracle equivalence", worst <= 1e-8, f"max |dlnP| = {worst:.3g} over {count} points, tol 1e-8")


def test_criterion_2_series_certification():
    certified, bad = 0, []
    for n, p, g, kind in grid_points(min_n=64):
        kg = kind_geometry(g, p, kind)
        res = g_series(build_coefficients(g, kg.theta, 22), g, n, "auto")
        K = res.truncation_index
        if not certify_sandwich(g, p, n, K + 1, K).holds:
            continue
        certified += 1
        ref = g_integral(g, kg, n)
        err = ref.value - res.g_value
        # comparison resolution: quadrature error estimate plus roundoff in g
        noise = ref.error + 4 * EPS * abs(ref.value)
        ok = abs(err) <= abs(res.first_neglected) + noise
        ok = ok and (abs(err) <= noise or np.sign(err) == np.sign(res.first_neglected))
        if not ok:
            bad.append((n, p.omega, g.gamma, kind.value))
    report(2, "series certification", certified > 0 and not bad,
           f"{certified} certified points, {len(bad)} violations")


def test_criterion_3_closed_form_identities():
    p = ChannelParams(1.0)
    worst_c0 = worst_g1 = 0.0
    count = 0
    for gam in np.linspace(0.05, 2.0, 10):
        g = make_threshold(float(gam), p)
        for d in (-2.0, -1.0, -0.5, -0.2, -0.05, 0.05, 0.2, 0.5, 1.0, 2.0):
            theta = float(gam + d)
            t = build_coefficients(g, theta, 3)
            D = math.expm1(theta - g.gamma)
            worst_c0 = max(worst_c0, abs(t.c0 * math.sqrt(g.c_gamma) * D - 1.0))
            kg = kind_geometry(g, p, Kind.MD)
            kg = type(kg)(kg.kind, theta, kg.step_sign, kg.v, D)
            worst_g1 = max(worst_g1, abs(g1(g, kg) / (-2.0 * g.s_gamma * t.c_even[1] / t.c0) - 1.0))
            count += 1
    ok = count == 100 and worst_c0 <= 1e-10 and worst_g1 <= 1e-10
    report(3, "closed-form identities", ok, f"{count} points, c0 rel {worst_c0:.3g}, g1 rel {worst_g1:.3g}, tol 1e-10")


def test_criterion_4_capacity_limit():
    r = bounds.converse_rate(BoundQuery(10_000_000, 1.0, pe=1e-5), certify=False).value
    report(4, "capacity limit", 0.495 <= r <= 0.5, f"R(n=1e7) = {r:.6f}, required [0.495, 0.5]")


def test_criterion_5_ebn0_gaps():
    parts, ok = [], True
    for n, expected in ((10_000, 1.2), (100_000, 0.6), (1_000_000, 0.3)):
        gap = bounds.min_ebn0(n, 1e-5)[0] - EBN0_LIMIT_DB
        ok = ok and abs(gap - expected) <= 0.1
        parts.append(f"n={n}: {gap:.3f} dB vs {expected}")
    report(5, "Eb/N0 gaps", ok, "; ".join(parts) + "; tol 0.1 dB")


def test_criterion_6_excess_power():
    a = bounds.excess_power_db(100_000, 1e-5, 1.0)
    b = bounds.excess_power_db(1_000_000, 1e-5, 1.0)
    report(6, "excess power crossing", a > 0.1 > b, f"dOmega(1e5) = {a:.4f} dB, dOmega(1e6) = {b:.4f} dB")


def test_criterion_7_high_snr_consistency():
    parts, ok = [], True
    for n in (100, 1000, 10_000):
        d = bounds.high_snr_excess(n, 1e-5)[0]
        e = bounds.excess_power_db(n, 1e-5, 1e4)
        ok = ok and abs(d - e) <= 0.02
        parts.append(f"n={n}: {abs(d - e):.2g}")
    report(7, "high-SNR consistency", ok, "; ".join(parts) + " dB, tol 0.02")


def test_criterion_8_ordering():
    bad_kb = bad_rate = bad_pe = 0
    kb_points = rate_cert = pe_points = 0
    for n in (10, 100, 1000):
        for snr_db in np.arange(-4.0, 8.0 + 1e-9, 0.5):
            om = 10 ** (snr_db / 10)
            qe = BoundQuery(n, om, rate=0.5)
            res = bounds.converse_error(qe)
            if res.status is Status.OK:
                p1 = bounds.closed_form_error(qe, 1, gamma_ref=res.gamma_star)
                pe_points += 1
                if p1 is None or not res.value.log_value <= p1 + 1e-12 * abs(p1):
                    bad_pe += 1
            pe = res.value.value
            if not 0.0 < pe < 0.5:
                continue
            q = BoundQuery(n, om, pe=pe)
            rr = bounds.converse_rate(q)
            if rr.certified:
                rate_cert += 1
                r1, r2 = rr.certified_bracket
                if not r1 <= rr.value <= r2:
                    bad_rate += 1
            kb_points += 1
            if bounds.kappa_beta_rate(q) > rr.value:
                bad_kb += 1
    ok = bad_kb == bad_rate == bad_pe == 0 and kb_points and rate_cert and pe_points
    report(8, "ordering", bool(ok),
           f"kappa-beta {bad_kb}/{kb_points}, certified rate bracket {bad_rate}/{rate_cert}, "
           f"one-term error {bad_pe}/{pe_points} violations")


def test_criterion_9_properties():
    fails = []
    rn = [bounds.converse_rate(BoundQuery(n, 1.0, pe=1e-5), certify=False).value for n in (100, 1000, 10_000)]
    rp = [bounds.converse_rate(BoundQuery(500, 1.0, pe=pe), certify=False).value for pe in (1e-5, 1e-3, 1e-1)]
    if not np.all(np.diff(rn) > 0):
        fails.append("rate in n")
    if not np.all(np.diff(rp) > 0):
        fails.append("rate in pe")
    phi = certification_grid(2048, 64)
    phi = phi[phi < math.pi]
    tol = 4 * EPS
    for om in (0.5, 1.0, 10.0):
        p = ChannelParams(om)
        for gam in (0.05, 0.5, p.gamma_bar - 1e-3):
            g = make_threshold(gam, p)
            if np.max(bbar_bound(g, phi)) > 1.0 + tol:
                fails.append(f"bbar Omega={om} gamma={gam:.3g}")
            lo, mid, hi = dm8_bracket(g, phi)
            if np.any(lo > mid + tol) or np.any(mid > hi + tol):
                fails.append(f"dm8 Omega={om} gamma={gam:.3g}")
            for kind in Kind:
                kg = kind_geometry(g, p, kind)
                if abs(kg.pole_distance) < 1e-8:
                    continue
                if np.max(c_ratio_profile(g, kg, phi)) > 1.0 + tol:
                    fails.append(f"c/c0 {kind.value} Omega={om} gamma={gam:.3g}")
    worst = 0.0
    for n in (1, 4, 16, 64, 256):
        for s in (0.5, 4.0, 40.0):
            for a in (0.3 * n, n + s, 2.0 * (n + s)):
                lc, lu = chi2_noncentral_log_cdf_ccdf(a, n, s)
                worst = max(worst, abs(math.exp(lc) + math.exp(lu) - 1.0))
    if worst > 1e-12:
        fails.append(f"complementarity {worst:.3g}")
    report(9, "property suite", not fails, "all properties hold" if not fails else ", ".join(fails))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
