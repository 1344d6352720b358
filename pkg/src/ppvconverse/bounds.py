"""Rate and error-probability bounds for the AWGN channel at finite block-length.

The converse is driven by the Neyman-Pearson threshold ``gamma``:
``P_MD(gamma) = Pe`` fixes the threshold and ``-log2 P_FA(gamma) / n`` is
the rate bound.  All probabilities are handled in log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .certify import certify_sandwich
from .errors import OracleRangeError, PoleError, TwoTermBreakdown, WindowError
from .roots import BracketError, bracketed_root, golden_section_max
from .series_engine import closed_form_log
from .specfun import LogProb, erf, erf_inv, gaussian_q, gaussian_q_inv, q_exact
from .temme_core import ChannelParams, Kind, in_window, log_prob, make_threshold, validity_window

__all__ = [
    "Status",
    "BoundQuery",
    "BoundResult",
    "converse_rate",
    "converse_error",
    "closed_form_rate",
    "closed_form_error",
    "normal_approx_rate",
    "normal_approx_error",
    "kappa_beta_rate",
    "excess_power_db",
    "high_snr_excess",
    "linear_excess_approx",
    "rate_approx",
    "min_ebn0",
    "rate_at_ebn0",
    "uncoded_error_n1",
]

LOG2 = math.log(2.0)
LOG2E = 1.0 / LOG2
# relative offset keeping bracket ends off the window edges (where a pole sits)
_EDGE = 1e-9


class Status(str, Enum):
    OK = "ok"
    BELOW_FLOOR = "below_floor"
    WINDOW_FALLBACK = "window_fallback"


@dataclass(frozen=True)
class BoundQuery:
    """Block-length, linear SNR and either a target ``pe`` or a rate in bits/symbol."""

    n: int
    omega: float
    pe: float | None = None
    rate: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"block-length must be an integer >= 1, got {self.n!r}")
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError(f"SNR must be positive and finite, got {self.omega!r}")
        if (self.pe is None) == (self.rate is None):
            raise ValueError("give exactly one of pe and rate")
        if self.pe is not None and not 0.0 < self.pe < 0.5:
            raise ValueError(f"error probability must lie in (0, 1/2), got {self.pe!r}")
        if self.rate is not None and not self.rate * self.n >= 1.0:
            raise ValueError(f"rate must be at least 1/n, got {self.rate!r}")

    @property
    def params(self) -> ChannelParams:
        return ChannelParams(self.omega)

    @classmethod
    def from_db(cls, n: int, snr_db: float, **kw) -> "BoundQuery":
        return cls(n, 10.0 ** (snr_db / 10.0), **kw)


@dataclass(frozen=True)
class BoundResult:
    """``value`` is the rate bound (bits/symbol) or a :class:`LogProb`."""

    value: float | LogProb
    gamma_star: float
    lambda_prime_star: float
    spectral_efficiency: float
    certified_bracket: tuple[float, float] | None
    method_used: str
    status: Status
    certified: bool = False


# ---------------------------------------------------------------------------
# threshold solves


@dataclass(frozen=True)
class _ClosedValue:
    # closed-form log values may exceed 0, so they bypass LogProb validation
    log_value: float

    @property
    def label(self) -> str:
        return "closed_form"


def _logp(params: ChannelParams, n: int, gamma: float, kind, method: str, K) -> LogProb:
    geom = make_threshold(gamma, params)
    if method == "closed_form":
        return _ClosedValue(closed_form_log(geom, params, kind, n, 1 if K == "auto" else int(K)))
    try:
        return log_prob(geom, params, kind, n, method, K)
    except PoleError:
        # the threshold sits on a pole to within 1e-8; step off it
        geom = make_threshold(gamma * (1.0 + 1e-7), params)
        return log_prob(geom, params, kind, n, method, K)


def _solve_threshold(params, n, kind, log_target, method="auto", K="auto"):
    """Threshold where log P_kind = log_target; returns (gamma, LogProb, in_window_flag).

    P_MD increases and P_FA decreases with gamma.  Outside the validity
    window only the oracle and integral evaluators are usable.
    """
    lo, hi = validity_window(params)
    span = hi - lo
    sign = 1.0 if Kind(kind) is Kind.MD else -1.0
    cache = {}

    def f(g):
        lp = _logp(params, n, g, kind, method, K)
        cache[g] = lp
        return sign * (lp.log_value - log_target)

    a, b = lo + _EDGE * span, hi - _EDGE * span
    fa, fb = f(a), f(b)
    inside = True
    extendable = method in ("auto", "oracle", "integral")
    if fa > 0:
        if not extendable:
            raise WindowError("target not reachable inside the validity window")
        inside = False
        b, fb = a, fa
        for _ in range(80):
            a = 0.5 * a
            fa = f(a)
            if fa <= 0:
                break
        else:
            raise BracketError("no threshold below the validity window reaches the target")
    elif fb < 0:
        if not extendable:
            raise WindowError("target not reachable inside the validity window")
        inside = False
        a, fa = b, fb
        step = max(span, 0.1)
        for _ in range(80):
            b = b + step
            step *= 2.0
            fb = f(b)
            if fb >= 0:
                break
        else:
            raise BracketError("no threshold above the validity window reaches the target")
    ftol = 1e-12 * max(1.0, abs(log_target))
    root = bracketed_root(f, a, b, flo=fa, fhi=fb, xtol=1e-15, ftol=ftol)
    g = root.x
    lp = cache.get(g) or _logp(params, n, g, kind, method, K)
    return g, lp, inside and in_window(g, params)


def _closed_form_threshold(params, n, kind, log_target, order, gamma_ref):
    """Threshold where the one- or two-term closed form hits the target.

    ``gamma_ref`` is the exact solution, used to orient the search: the
    one-term form over-estimates both probabilities and the two-term form
    under-estimates them when the sandwich certificate holds.
    """
    lo, hi = validity_window(params)
    span = hi - lo
    sign = 1.0 if Kind(kind) is Kind.MD else -1.0

    def f(g):
        try:
            lp = _logp(params, n, g, kind, "closed_form", order)
        except TwoTermBreakdown:
            return math.nan
        return sign * (lp.log_value - log_target)

    a_end, b_end = lo + _EDGE * span, hi - _EDGE * span
    g0 = min(max(gamma_ref, a_end), b_end)
    f0 = f(g0)
    if math.isnan(f0):
        return None
    if f0 == 0:
        return g0
    # march towards the side where the sign flips, halving the distance to the edge
    target_end = a_end if f0 > 0 else b_end
    prev, fprev = g0, f0
    for k in range(1, 60):
        g = target_end + (g0 - target_end) * 0.5**k
        fg = f(g)
        if math.isnan(fg):
            return None
        if (fg > 0) != (fprev > 0):
            lo_x, hi_x, flo, fhi = (g, prev, fg, fprev) if g < prev else (prev, g, fprev, fg)
            return bracketed_root(f, lo_x, hi_x, flo=flo, fhi=fhi, xtol=1e-15,
                                  ftol=1e-12 * max(1.0, abs(log_target))).x
        prev, fprev = g, fg
    return None


def _rate_from_logfa(log_fa: float, n: int) -> float:
    return -log_fa / (n * LOG2)


# ---------------------------------------------------------------------------
# converse


def converse_rate(query: BoundQuery, method: str = "auto", K="auto", certify: bool = True) -> BoundResult:
    """Converse (upper) bound on the rate at error probability ``query.pe``."""
    if query.pe is None:
        raise ValueError("converse_rate needs a target error probability")
    params, n = query.params, int(query.n)
    g, lp_md, inside = _solve_threshold(params, n, Kind.MD, math.log(query.pe), method, K)
    lp_fa = _logp(params, n, g, Kind.FA, method if inside else "auto", K)
    rate = _rate_from_logfa(lp_fa.log_value, n)
    status = Status.OK if inside else Status.WINDOW_FALLBACK
    if rate * n < 1.0:
        status, rate = Status.BELOW_FLOOR, 0.0
    geom = make_threshold(g, params)
    bracket, certified = None, False
    if certify and inside and status is Status.OK:
        cert = certify_sandwich(geom, params, n, 2, 1)
        if cert.holds:
            r1 = closed_form_rate(query, 1, gamma_ref=g)
            r2 = closed_form_rate(query, 2, gamma_ref=g)
            if r1 is not None and r2 is not None:
                bracket, certified = (r1, r2), True
    return BoundResult(rate, g, geom.lambda_prime, 2.0 * rate, bracket, lp_fa.label, status, certified)


def closed_form_rate(query: BoundQuery, order: int, gamma_ref: float | None = None) -> float | None:
    """Rate bound with both probabilities from the ``order``-term closed form.

    Returns None when the closed form cannot reach the target inside the
    validity window (or breaks down for ``order == 2``).
    """
    params, n = query.params, int(query.n)
    log_target = math.log(query.pe)
    if gamma_ref is None:
        lo, hi = validity_window(params)
        gamma_ref = 0.5 * (lo + hi)
    g = _closed_form_threshold(params, n, Kind.MD, log_target, order, gamma_ref)
    if g is None:
        return None
    try:
        lp = _logp(params, n, g, Kind.FA, "closed_form", order)
    except (TwoTermBreakdown, WindowError):
        return None
    return _rate_from_logfa(lp.log_value, n)


def converse_error(query: BoundQuery, method: str = "auto", K="auto", certify: bool = True) -> BoundResult:
    """Lower bound on the error probability at rate ``query.rate``."""
    if query.rate is None:
        raise ValueError("converse_error needs a target rate")
    params, n = query.params, int(query.n)
    log_target = -n * query.rate * LOG2
    g, _, inside = _solve_threshold(params, n, Kind.FA, log_target, method, K)
    lp_md = _logp(params, n, g, Kind.MD, method if inside else "auto", K)
    status = Status.OK if inside else Status.WINDOW_FALLBACK
    geom = make_threshold(g, params)
    bracket, certified = None, False
    if certify and inside:
        cert = certify_sandwich(geom, params, n, 2, 1)
        if cert.holds:
            p1 = closed_form_error(query, 1, gamma_ref=g)
            p2 = closed_form_error(query, 2, gamma_ref=g)
            if p1 is not None and p2 is not None:
                bracket, certified = (p2, p1), True
    return BoundResult(lp_md, g, geom.lambda_prime, 2.0 * query.rate, bracket, lp_md.label, status, certified)


def closed_form_error(query: BoundQuery, order: int, gamma_ref: float | None = None) -> float | None:
    """Natural log of the error-probability bound from the ``order``-term closed form.

    For ``order == 1`` the result is ``inf`` when the one-term rate stays
    below the target all the way to the upper window edge: the matching
    one-term miss-detection form diverges there, so the bound is vacuous.
    """
    params, n = query.params, int(query.n)
    log_target = -n * query.rate * LOG2
    lo, hi = validity_window(params)
    if gamma_ref is None:
        gamma_ref = 0.5 * (lo + hi)
    g = _closed_form_threshold(params, n, Kind.FA, log_target, order, gamma_ref)
    if g is None:
        if order == 1:
            edge = hi - _EDGE * (hi - lo)
            if _logp(params, n, edge, Kind.FA, "closed_form", 1).log_value > log_target:
                return math.inf
        return None
    try:
        return _logp(params, n, g, Kind.MD, "closed_form", order).log_value
    except (TwoTermBreakdown, WindowError):
        return None


# ---------------------------------------------------------------------------
# reference curves


def normal_approx_rate(query: BoundQuery) -> float:
    om, n = query.omega, query.n
    cap = 0.5 * math.log1p(om) / LOG2
    disp = om * (2.0 + om) / (2.0 * n * (1.0 + om) ** 2)
    return cap - LOG2E * gaussian_q_inv(query.pe) * math.sqrt(disp) + math.log2(n) / (2.0 * n)


def normal_approx_error(n: int, omega: float, rate: float) -> float:
    """Error probability at which the normal approximation equals ``rate``."""
    cap = 0.5 * math.log1p(omega) / LOG2
    disp = omega * (2.0 + omega) / (2.0 * n * (1.0 + omega) ** 2)
    return gaussian_q((cap + math.log2(n) / (2.0 * n) - rate) / (LOG2E * math.sqrt(disp)))


def kappa_beta_rate(query: BoundQuery, method: str = "auto", grid: int = 24) -> float:
    """Achievability bound: best split of ``pe`` between erf(alpha) and P_MD.

    A coarse grid in log(alpha) locates the best cell, then golden-section
    search refines inside the neighbouring cells.  Returns -inf when no
    split is feasible.
    """
    params, n, pe = query.params, int(query.n), query.pe
    om = query.omega
    a_max = erf_inv(pe)
    scale = math.sqrt(1.0 + 2.0 * om) / (1.0 + om)

    def objective(log_a):
        a = math.exp(log_a)
        rest = pe - erf(a)
        if not rest > 0:
            return -math.inf
        try:
            g, _, inside = _solve_threshold(params, n, Kind.MD, math.log(rest), method)
            lp_fa = _logp(params, n, g, Kind.FA, method if inside else "auto", "auto")
        except (BracketError, WindowError, OracleRangeError):
            return -math.inf
        return (math.log(erf(scale * a)) - lp_fa.log_value) / (n * LOG2)

    hi = math.log(a_max) - 1e-9
    lo = hi - 30.0
    xs = np.linspace(lo, hi, grid)
    vals = [objective(x) for x in xs]
    i = int(np.argmax(vals))
    if not math.isfinite(vals[i]):
        return -math.inf
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, grid - 1)]
    x, fx = golden_section_max(objective, a, b, rtol=1e-6 / max(1.0, abs(hi)))
    return max(fx, vals[i])


def uncoded_error_n1(omega: float) -> float:
    """Error probability Q(sqrt(omega)) of the single-symbol binary scheme at rate 1/2."""
    return gaussian_q(math.sqrt(omega))


# ---------------------------------------------------------------------------
# excess power and high-SNR behaviour


def excess_power_db(n: int, pe: float, omega: float, method: str = "auto") -> float:
    """SNR gap (dB) to the capacity formula at the converse rate; nan below the floor."""
    res = converse_rate(BoundQuery(n, omega, pe=pe), method=method, certify=False)
    if res.status is Status.BELOW_FLOOR:
        return math.nan
    return 10.0 * math.log10(omega) - 10.0 * math.log10(math.expm1(2.0 * res.value * LOG2))


def high_snr_excess(n: int, pe: float) -> tuple[float, float, float]:
    """Limits as SNR grows: (excess power dB, rate offset bits, lambda').

    The rate offset is the amount by which the rate bound falls short of
    ``log2(omega) / 2``.
    """
    if not 0.0 < pe < 0.5:
        raise ValueError("error probability must lie in (0, 1/2)")
    log_pe = math.log(pe)

    def f(lp):
        x = math.sqrt(0.5 * n) * (lp - 1.0)
        return math.log(q_exact(x)) - 0.5 * n * (lp - 1.0 - math.log(lp)) - log_pe

    a, b = 1.0, 2.0
    fa = f(a)
    fb = f(b)
    while fb > 0:
        a, fa = b, fb
        b *= 2.0
        fb = f(b)
    lam = bracketed_root(f, a, b, flo=fa, fhi=fb, xtol=1e-15, ftol=1e-13).x
    log_q = math.log(q_exact(math.sqrt(0.5 * n)))
    delta_db = 20.0 / n * log_q / math.log(10.0) + 10.0 * math.log10(lam)
    offset = log_q / (n * LOG2) + 0.5 * math.log2(lam)
    return delta_db, offset, lam


def linear_excess_approx(n: int, pe: float) -> float:
    return 10.0 * math.log10(math.e) * math.sqrt(2.0 / n) * gaussian_q_inv(pe)


def rate_approx(n: int, pe: float, omega: float) -> float:
    cap = 0.5 * math.log1p(omega) / LOG2
    return cap - LOG2E * gaussian_q_inv(pe) * math.sqrt(0.5 / n)


# ---------------------------------------------------------------------------
# energy per bit


def _converse_rate_fn(n, pe, method):
    def rate(om):
        return converse_rate(BoundQuery(n, om, pe=pe), method=method, certify=False).value

    return rate


def _ebn0_ratio(rate_fn, log_omega):
    om = math.exp(log_omega)
    r = rate_fn(om)
    if not r > 0:
        return math.inf
    return om / (2.0 * r)


def min_ebn0(n: int, pe: float, method: str = "auto", snr_db_range=(-30.0, 15.0),
             rate_fn=None) -> tuple[float, float]:
    """Smallest Eb/N0 (dB) over SNR and the SNR (dB) attaining it.

    ``rate_fn(omega)`` defaults to the converse rate; any rate curve in
    bits/symbol can be passed instead.
    """
    if rate_fn is None:
        rate_fn = _converse_rate_fn(n, pe, method)
    lo, hi = (d * math.log(10.0) / 10.0 for d in snr_db_range)
    xs = np.linspace(lo, hi, 46)
    vals = [_ebn0_ratio(rate_fn, x) for x in xs]
    i = int(np.argmin(vals))
    if not math.isfinite(vals[i]):
        return math.inf, math.nan
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    x, fx = golden_section_max(lambda t: -_ebn0_ratio(rate_fn, t), a, b, rtol=1e-7)
    best = min(-fx, vals[i])
    x = x if -fx <= vals[i] else xs[i]
    return 10.0 * math.log10(best), float(10.0 * x / math.log(10.0))


def rate_at_ebn0(n: int, pe: float, ebn0_db: float, method: str = "auto",
                 minimum: tuple[float, float] | None = None, rate_fn=None) -> tuple[float, float]:
    """(rate bits/symbol, SNR dB) on the stable branch where omega / (2 R(omega)) = Eb/N0.

    The branch above the minimum of omega / (2 R) is the one where the ratio
    increases with the SNR; the SNR is solved to 1e-9 relative.  Returns
    (nan, nan) below the minimum.
    """
    if rate_fn is None:
        rate_fn = _converse_rate_fn(n, pe, method)
    if minimum is None:
        minimum = min_ebn0(n, pe, method, rate_fn=rate_fn)
    min_db, snr_min_db = minimum
    if not ebn0_db >= min_db:
        return math.nan, math.nan
    target = ebn0_db * math.log(10.0) / 10.0
    a = snr_min_db * math.log(10.0) / 10.0

    def f(t):
        return math.log(_ebn0_ratio(rate_fn, t)) - target

    fa = f(a)
    if fa >= 0:
        t = a
    else:
        b, step = a + 0.5, 0.5
        fb = f(b)
        while fb < 0:
            a, fa = b, fb
            step *= 2.0
            b += step
            fb = f(b)
        t = bracketed_root(f, a, b, flo=fa, fhi=fb, xtol=1e-9, ftol=1e-12).x
    om = math.exp(t)
    return rate_fn(om), float(10.0 * t / math.log(10.0))
