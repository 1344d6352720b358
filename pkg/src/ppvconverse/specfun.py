"""Special functions: Gaussian tail, its asymptotic series, inverses, and a
Poisson-mixture non-central chi-squared oracle.

Deep-tail probabilities are handled as natural logarithms (see
:class:`LogProb`); linear values are only produced at the API edge.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, gammaln

from .roots import bracketed_root

__all__ = [
    "AccuracyWarning",
    "LogProb",
    "gaussian_q",
    "log_gaussian_q",
    "q_exact",
    "q_series",
    "q_series_terms",
    "gaussian_q_inv",
    "erf",
    "erf_inv",
    "log_gammainc_lower",
    "log_gammainc_upper",
    "chi2_noncentral_cdf_oracle",
    "chi2_noncentral_log_cdf_ccdf",
]

SQRT2 = math.sqrt(2.0)
SQRT_PI = math.sqrt(math.pi)


class AccuracyWarning(UserWarning):
    """An evaluation could not meet its advertised accuracy."""


@dataclass(frozen=True)
class LogProb:
    """A probability stored as its natural logarithm.

    ``method`` is one of ``"oracle"``, ``"integral"``, ``"series"`` or
    ``"closed_form"``; ``terms`` carries the series/closed-form order.
    ``bracket`` optionally holds a certified ``(log_lower, log_upper)``.
    """

    log_value: float
    method: str = "oracle"
    terms: int | None = None
    bracket: tuple[float, float] | None = None

    def __post_init__(self):
        if math.isnan(self.log_value):
            raise ValueError("log probability is NaN")
        if self.log_value > 1e-9:
            raise ValueError(f"log probability {self.log_value!r} exceeds 0")
        if self.log_value > 0.0:
            object.__setattr__(self, "log_value", 0.0)
        if self.bracket is not None:
            lo, hi = self.bracket
            if not lo <= self.log_value <= hi:
                raise ValueError(f"bracket {self.bracket!r} excludes {self.log_value!r}")

    @property
    def value(self) -> float:
        return math.exp(self.log_value)

    @property
    def log10(self) -> float:
        return self.log_value / math.log(10.0)

    @property
    def label(self) -> str:
        if self.terms is None:
            return self.method
        return f"{self.method}({self.terms})"


# ---------------------------------------------------------------------------
# Gaussian tail
# ---------------------------------------------------------------------------

def gaussian_q(x: float) -> float:
    """Q(x) = P[N(0, 1) > x]."""
    return 0.5 * math.erfc(x / SQRT2)


def q_exact(x: float) -> float:
    """Scaled tail q(x) = exp(x^2/2) Q(x), accurate for any real x."""
    return 0.5 * float(erfcx(x / SQRT2))


def log_gaussian_q(x: float) -> float:
    """ln Q(x) without underflow for large positive x."""
    if x < 5.0:
        return math.log(gaussian_q(x))
    return -0.5 * x * x + math.log(q_exact(x))


def q_series_terms(x: float, kmax: int) -> np.ndarray:
    """The first ``kmax`` terms of the divergent expansion of q(x)."""
    if not x > 0:
        raise ValueError("q_series needs x > 0")
    terms = np.empty(kmax)
    z = 2.0 / (x * x)
    term = math.sqrt(z) / (2.0 * SQRT_PI)
    for k in range(kmax):
        terms[k] = term
        # Gamma(k+3/2)/Gamma(k+1/2) = k + 1/2
        term *= -(k + 0.5) * z
    return terms


def q_series(x: float, K: int | str = "auto", kmax: int = 200) -> float:
    """Partial sum of the asymptotic series for q(x).

    With ``K="auto"`` the sum stops just before the smallest-magnitude term,
    which is then the error bound (the remainders alternate in sign).
    """
    if K == "auto":
        terms = q_series_terms(x, kmax)
        K = max(1, int(np.argmin(np.abs(terms[1:]))) + 1)
        return float(np.sum(terms[:K]))
    if K < 1:
        raise ValueError("K must be >= 1")
    return float(np.sum(q_series_terms(x, K)))


def gaussian_q_inv(p: float) -> float:
    """Inverse of :func:`gaussian_q` on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"gaussian_q_inv needs 0 < p < 1, got {p!r}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -gaussian_q_inv(1.0 - p)
    logp = math.log(p)
    res = bracketed_root(lambda x: log_gaussian_q(x) - logp, 0.0, 40.0, xtol=1e-16)
    return res.x


def erf(x: float) -> float:
    return math.erf(x)


def erf_inv(y: float) -> float:
    """Inverse error function on (-1, 1)."""
    if not -1.0 < y < 1.0:
        raise ValueError(f"erf_inv needs |y| < 1, got {y!r}")
    if y == 0.0:
        return 0.0
    if y < 0.0:
        return -erf_inv(-y)
    if y <= 0.5:
        # erf(x) <= 2x/sqrt(pi), so the root is at least y*sqrt(pi)/2
        x0 = 0.5 * SQRT_PI * y
        res = bracketed_root(lambda x: math.erf(x) / y - 1.0, x0, 2.0 * x0 + 1.0, xtol=1e-16)
        return res.x
    target = math.log1p(-y)
    res = bracketed_root(
        lambda x: math.log(math.erfc(x)) - target, 0.0, 26.0, xtol=1e-16
    )
    return res.x


# ---------------------------------------------------------------------------
# Regularised incomplete gamma in log domain
# ---------------------------------------------------------------------------

def _log_p_series(a: float, x: float) -> float:
    # P(a,x) = e^-x x^a / Gamma(a+1) * sum_k x^k / ((a+1)...(a+k))
    total, term, k = 1.0, 1.0, 0
    while True:
        k += 1
        term *= x / (a + k)
        total += term
        if term < 1e-17 * total:
            break
        if k > 100000:
            raise RuntimeError("incomplete gamma series did not converge")
    return -x + a * math.log(x) - math.lgamma(a + 1.0) + math.log(total)


def _log_q_cfrac(a: float, x: float) -> float:
    # modified Lentz evaluation of the Legendre continued fraction
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 100000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    else:
        raise RuntimeError("incomplete gamma continued fraction did not converge")
    return -x + a * math.log(x) - math.lgamma(a) + math.log(h)


def _log1mexp(v: float) -> float:
    """ln(1 - e^v) for v <= 0."""
    if v > -math.log(2.0):
        return math.log(-math.expm1(v))
    return math.log1p(-math.exp(v))


def log_gammainc_lower(a: float, x: float) -> float:
    """ln P(a, x), the regularised lower incomplete gamma function."""
    if a <= 0 or x < 0:
        raise ValueError("need a > 0 and x >= 0")
    if x == 0.0:
        return -math.inf
    if x < a + 1.0:
        return _log_p_series(a, x)
    return _log1mexp(_log_q_cfrac(a, x))


def log_gammainc_upper(a: float, x: float) -> float:
    """ln Q(a, x) = ln(1 - P(a, x))."""
    if a <= 0 or x < 0:
        raise ValueError("need a > 0 and x >= 0")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return _log1mexp(_log_p_series(a, x))
    return _log_q_cfrac(a, x)


# ---------------------------------------------------------------------------
# Non-central chi-squared oracle
# ---------------------------------------------------------------------------

ORACLE_TRUNCATION = 1e-30
_LOG_TRUNC = math.log(ORACLE_TRUNCATION)


def _logsumexp(v: np.ndarray) -> float:
    m = float(np.max(v))
    if m == -math.inf:
        return -math.inf
    return m + math.log(float(np.sum(np.exp(v - m))))


def _mixture(x: float, half: float, mu: float, J: int) -> tuple[float, float, float, float]:
    j = np.arange(J + 1, dtype=float)
    logw = -mu + j * math.log(mu) - gammaln(j + 1.0)
    # ln of x^(half+j) e^-x / Gamma(half+j+1): the increments linking
    # consecutive orders of P and Q
    logd = (half + j) * math.log(x) - x - gammaln(half + j + 1.0)

    logq = np.empty(J + 1)
    logq[0] = log_gammainc_upper(half, x)
    logq[1:] = logd[:-1]
    logq = np.logaddexp.accumulate(logq)

    logp = np.empty(J + 1)
    logp[0] = log_gammainc_lower(half + J, x)
    logp[1:] = logd[:-1][::-1]
    logp = np.logaddexp.accumulate(logp)[::-1]

    log_cdf = _logsumexp(logw + logp)
    log_ccdf = _logsumexp(logw + logq)
    # Poisson mass beyond J bounds both neglected remainders
    log_tail = log_gammainc_lower(J + 1.0, mu)
    return log_cdf, log_ccdf, log_tail + logp[-1], log_tail


def chi2_noncentral_log_cdf_ccdf(a: float, n: int, s: float) -> tuple[float, float]:
    """Natural logs of the non-central chi-squared CDF and CCDF at ``a``.

    Both are Poisson mixtures of central chi-squared tails; the CCDF is
    summed directly rather than taken as ``1 - CDF``.
    """
    if a < 0 or s < 0:
        raise ValueError("need a >= 0 and s >= 0")
    if n < 1 or int(n) != n:
        raise ValueError("degrees of freedom must be a positive integer")
    if a == 0.0:
        return -math.inf, 0.0
    half = 0.5 * n
    x = 0.5 * a
    mu = 0.5 * s
    if mu == 0.0:  # also catches a subnormal s that halves to zero
        return log_gammainc_lower(half, x), log_gammainc_upper(half, x)
    J = int(math.ceil(mu + 12.0 * math.sqrt(mu) + 40.0))
    for _ in range(12):
        log_cdf, log_ccdf, rem_cdf, rem_ccdf = _mixture(x, half, mu, J)
        if rem_cdf <= log_cdf + _LOG_TRUNC and rem_ccdf <= log_ccdf + _LOG_TRUNC:
            return log_cdf, log_ccdf
        J *= 2
    warnings.warn(
        f"Poisson truncation bound not met (a={a}, n={n}, s={s})", AccuracyWarning, stacklevel=2
    )
    return log_cdf, log_ccdf


def chi2_noncentral_cdf_oracle(a: float, n: int, s: float, upper: bool = False) -> LogProb:
    """Non-central chi-squared CDF (or CCDF with ``upper=True``) as a LogProb."""
    log_cdf, log_ccdf = chi2_noncentral_log_cdf_ccdf(a, n, s)
    return LogProb(log_ccdf if upper else log_cdf, "oracle")
