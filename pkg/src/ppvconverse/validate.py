"""Self-check suite with a line-oriented key=value report.

Each line reads ``name=... expected=... got=... tolerance=... status=pass|fail``.
Values never contain spaces, so a report parses back by splitting on
whitespace and then on the first ``=``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import bounds
from .bounds import BoundQuery
from .certify import bbar_bound, c_ratio_profile, certification_grid, certify_sandwich, dm8_bracket
from .series_engine import build_coefficients, g1, g_series
from .specfun import chi2_noncentral_log_cdf_ccdf
from .temme_core import (
    ChannelParams,
    Kind,
    g_integral,
    kind_geometry,
    log_prob_integral,
    log_prob_oracle,
    make_threshold,
    validity_window,
)

FIELDS = ("name", "expected", "got", "tolerance", "status")
ORACLE_N = (4, 8, 16, 64, 256)
ORACLE_OMEGA = (0.25, 1.0, 4.0)
EBN0_LIMIT_DB = 10.0 * math.log10(math.log(2.0))
EBN0_GAPS = {10_000: 1.2, 100_000: 0.6, 1_000_000: 0.3}


@dataclass(frozen=True)
class Check:
    name: str
    expected: str
    got: str
    tolerance: str
    status: str

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _s(x) -> str:
    if isinstance(x, str):
        return x.replace(" ", "_")
    return format(float(x), ".6g")


def check(name, expected, got, tolerance, passed: bool) -> Check:
    return Check(_s(name), _s(expected), _s(got), _s(tolerance), "pass" if passed else "fail")


def format_report(checks) -> str:
    return "".join(" ".join(f"{k}={getattr(c, k)}" for k in FIELDS) + "\n" for c in checks)


def parse_report(text: str) -> list[Check]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        kv = dict(tok.split("=", 1) for tok in line.split())
        out.append(Check(*(kv[k] for k in FIELDS)))
    return out


def interior_gammas(params: ChannelParams, count: int = 5) -> np.ndarray:
    lo, hi = validity_window(params)
    return lo + (hi - lo) * (np.arange(1, count + 1) / (count + 1))


# ---------------------------------------------------------------------------
# individual suites


def oracle_equivalence(tol=1e-8) -> list[Check]:
    worst = 0.0
    for n in ORACLE_N:
        for om in ORACLE_OMEGA:
            params = ChannelParams(om)
            for gam in interior_gammas(params):
                geom = make_threshold(gam, params)
                for kind in Kind:
                    err = abs(log_prob_integral(geom, params, kind, n).log_value
                              - log_prob_oracle(geom, params, kind, n).log_value)
                    if not err <= worst:  # NaN propagates into a failure
                        worst = err
    return [check("oracle_vs_integral_max_abs_log", 0.0, worst, tol, worst <= tol)]


def series_error_ok(err: float, first_neglected: float, noise: float) -> bool:
    """Truncation error bounded by, and signed like, the first neglected term.

    ``noise`` is the resolution of the comparison (reference error plus
    roundoff in g); the sign is only tested where the error exceeds it.
    """
    if not abs(err) <= abs(first_neglected) + noise:
        return False
    return abs(err) <= noise or np.sign(err) == np.sign(first_neglected)


def series_vs_integral() -> list[Check]:
    """Where the (K+1, K) sandwich holds, the series error stays within the first neglected term."""
    bad, tested = 0, 0
    for n in (n for n in ORACLE_N if n >= 64):
        for om in ORACLE_OMEGA:
            params = ChannelParams(om)
            for gam in interior_gammas(params):
                geom = make_threshold(gam, params)
                for kind in Kind:
                    kg = kind_geometry(geom, params, kind)
                    tables = build_coefficients(geom, kg.theta, 22)
                    res = g_series(tables, geom, n, "auto")
                    K = res.truncation_index
                    if not certify_sandwich(geom, params, n, K + 1, K, grid_size=512).holds:
                        continue
                    ref = g_integral(geom, kg, n)
                    noise = ref.error + 4.0 * np.finfo(float).eps * abs(ref.value)
                    tested += 1
                    if not series_error_ok(ref.value - res.g_value, res.first_neglected, noise):
                        bad += 1
    return [check("series_error_within_first_neglected", 0, bad, f"certified_points={tested}", bad == 0)]


def closed_form_identities(tol=1e-10) -> list[Check]:
    worst_c0 = worst_g1 = 0.0
    for om in (0.25, 1.0, 4.0, 10.0):
        params = ChannelParams(om)
        lo, hi = validity_window(params)
        for gam in np.linspace(lo, hi, 27)[1:-1]:
            geom = make_threshold(gam, params)
            for kind in Kind:
                kg = kind_geometry(geom, params, kind)
                if abs(kg.pole_distance) < 1e-6:
                    continue
                t = build_coefficients(geom, kg.theta, 3)
                c0 = 1.0 / (math.sqrt(geom.c_gamma) * kg.pole_distance)
                worst_c0 = max(worst_c0, abs(t.c0 / c0 - 1.0))
                ref = -2.0 * geom.s_gamma * t.c_even[1] / t.c0
                worst_g1 = max(worst_g1, abs(g1(geom, kg) / ref - 1.0))
    return [
        check("c0_identity_max_rel", 0.0, worst_c0, tol, worst_c0 <= tol),
        check("g1_identity_max_rel", 0.0, worst_g1, tol, worst_g1 <= tol),
    ]


def capacity_limit() -> list[Check]:
    r = bounds.converse_rate(BoundQuery(10_000_000, 1.0, pe=1e-5), certify=False).value
    return [check("rate_n1e7_0dB", "[0.495,0.5]", r, "interval", 0.495 <= r <= 0.5)]


def complementarity(tol=1e-12) -> list[Check]:
    worst = 0.0
    for n in (1, 4, 16, 64, 256):
        for s in (0.5, 4.0, 40.0):
            for a in (0.3 * n, n + s, 2.0 * (n + s)):
                lc, lu = chi2_noncentral_log_cdf_ccdf(a, n, s)
                worst = max(worst, abs(math.exp(lc) + math.exp(lu) - 1.0))
    return [check("oracle_cdf_plus_ccdf", 1.0, 1.0 + worst, tol, worst <= tol)]


def high_snr_consistency(tol=0.02) -> list[Check]:
    out = []
    for n in (100, 1000, 10_000):
        d = bounds.high_snr_excess(n, 1e-5)[0]
        e = bounds.excess_power_db(n, 1e-5, 1e4)
        out.append(check(f"high_snr_excess_n{n}", d, e, tol, abs(d - e) <= tol))
    return out


def profile_bounds(eps=4 * np.finfo(float).eps) -> list[Check]:
    worst_b = worst_c = worst_dm8 = -math.inf
    phi = certification_grid(1024, 32)
    phi = phi[phi < math.pi]
    for om in (0.5, 1.0, 10.0):
        params = ChannelParams(om)
        for gam in (0.05, 0.5, params.gamma_bar - 1e-3):
            geom = make_threshold(gam, params)
            worst_b = max(worst_b, float(np.max(bbar_bound(geom, phi))) - 1.0)
            lo, mid, hi = dm8_bracket(geom, phi)
            worst_dm8 = max(worst_dm8, float(np.max(lo - mid)), float(np.max(mid - hi)))
            for kind in Kind:
                kg = kind_geometry(geom, params, kind)
                if abs(kg.pole_distance) < 1e-8:
                    continue
                worst_c = max(worst_c, float(np.max(c_ratio_profile(geom, kg, phi))) - 1.0)
    return [
        check("bbar_max_minus_1", "<=0", worst_b, eps, worst_b <= eps),
        check("c_ratio_max_minus_1", "<=0", worst_c, eps, worst_c <= eps),
        check("dm8_bracket_violation", "<=0", worst_dm8, eps, worst_dm8 <= eps),
    ]


def monotonicity() -> list[Check]:
    rn = [bounds.converse_rate(BoundQuery(n, 1.0, pe=1e-5), certify=False).value for n in (100, 1000, 10_000)]
    rp = [bounds.converse_rate(BoundQuery(500, 1.0, pe=p), certify=False).value for p in (1e-5, 1e-3, 1e-1)]
    return [
        check("rate_increasing_in_n", "increasing", ",".join(f"{r:.6g}" for r in rn), "strict",
              bool(np.all(np.diff(rn) > 0))),
        check("rate_increasing_in_pe", "increasing", ",".join(f"{r:.6g}" for r in rp), "strict",
              bool(np.all(np.diff(rp) > 0))),
    ]


def excess_power_range() -> list[Check]:
    a = bounds.excess_power_db(100_000, 1e-5, 1.0)
    b = bounds.excess_power_db(1_000_000, 1e-5, 1.0)
    return [check("excess_power_0dB", "d(1e5)>0.1>d(1e6)", f"{a:.4g},{b:.4g}", "order", a > 0.1 > b)]


def ebn0_gaps(tol=0.1) -> list[Check]:
    out = []
    for n, ref in EBN0_GAPS.items():
        gap = bounds.min_ebn0(n, 1e-5)[0] - EBN0_LIMIT_DB
        out.append(check(f"ebn0_gap_n{n}", ref, gap, tol, abs(gap - ref) <= tol))
    return out


def ordering(snr_db=(-4.0, -2.0, 0.0, 2.0, 4.0, 6.0, 8.0)) -> list[Check]:
    bad_kb = bad_rate = bad_pe = 0
    cert_rate = cert_pe = 0
    for n in (10, 100, 1000):
        for x in snr_db:
            om = 10.0 ** (x / 10.0)
            qr = BoundQuery(n, om, rate=0.5)
            res = bounds.converse_error(qr)
            if res.status is bounds.Status.OK:
                p1 = bounds.closed_form_error(qr, 1, gamma_ref=res.gamma_star)
                if p1 is not None and not res.value.log_value <= p1 + 1e-12 * abs(p1):
                    bad_pe += 1
            if res.certified:
                cert_pe += 1
            # rate ordering at the error probability this point achieves
            pe = res.value.value
            if not 0.0 < pe < 0.5:
                continue
            q = BoundQuery(n, om, pe=pe)
            rr = bounds.converse_rate(q)
            if rr.certified:
                cert_rate += 1
                r1, r2 = rr.certified_bracket
                if not r1 <= rr.value <= r2:
                    bad_rate += 1
            if bounds.kappa_beta_rate(q) > rr.value:
                bad_kb += 1
    return [
        check("kappa_beta_below_converse", 0, bad_kb, "count", bad_kb == 0),
        check("certified_rate_bracket", 0, bad_rate, f"certified={cert_rate}", bad_rate == 0),
        check("error_below_one_term", 0, bad_pe, f"certified={cert_pe}", bad_pe == 0),
    ]


QUICK = (oracle_equivalence, closed_form_identities, complementarity, profile_bounds,
         capacity_limit, high_snr_consistency, monotonicity)
FULL = QUICK + (series_vs_integral, excess_power_range, ordering, ebn0_gaps)


def validate_suite(level: str = "quick", progress=None) -> list[Check]:
    """Run the quick or full suite; failures and exceptions become report entries."""
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    out = []
    for fn in QUICK if level == "quick" else FULL:
        t0 = time.perf_counter()
        try:
            out.extend(fn())
        except Exception as exc:  # reported, not raised
            out.append(check(fn.__name__, "no_error", type(exc).__name__, "-", False))
        if progress is not None:
            progress(f"{fn.__name__}: {time.perf_counter() - t0:.1f} s")
    return out
