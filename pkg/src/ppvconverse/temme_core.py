"""Threshold geometry, the steepest-descent path and the MD/FA evaluators.

The Neyman-Pearson threshold is parameterised by ``gamma > 0``.  Every
quantity the evaluators need (exponents, the descent path ``r(phi)`` and
its companions) is derived here from ``gamma`` and the SNR.  The function
``g`` is evaluated either as a single real integral along the path or via
the series engine; probabilities are returned in log domain.

Inside the validity window both probabilities are ``+-g exp(-n v / 2)``.
Outside it the step term is 1 and the probability is
``1 + g exp(-n v / 2)`` with ``g < 0``, evaluated with ``log1p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import OracleRangeError, PoleError, WindowError
from .roots import bracketed_root
from .specfun import LogProb, chi2_noncentral_cdf_oracle

__all__ = [
    "Kind",
    "ChannelParams",
    "ThresholdGeometry",
    "KindGeometry",
    "PathPoint",
    "make_threshold",
    "threshold_from_lambda_prime",
    "alpha",
    "kind_geometry",
    "validity_window",
    "in_window",
    "path_point",
    "path_arrays",
    "ConvergenceError",
    "IntegralResult",
    "g_integral",
    "integration_cutoff",
    "POLE_GUARD",
    "ORACLE_MAX_N",
    "METHODS",
    "log_prob",
    "log_prob_oracle",
    "log_prob_integral",
    "log_prob_series",
]

# the series and the integral refuse thresholds with |exp(theta - gamma) - 1| below this
POLE_GUARD = 1e-8

LOG2 = math.log(2.0)


class Kind(str, Enum):
    MD = "MD"
    FA = "FA"


@dataclass(frozen=True)
class ChannelParams:
    """AWGN channel at linear SNR ``omega``."""

    omega: float

    def __post_init__(self):
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError(f"SNR must be positive and finite, got {self.omega!r}")

    @classmethod
    def from_db(cls, snr_db: float) -> "ChannelParams":
        return cls(10.0 ** (snr_db / 10.0))

    @property
    def capacity_bits(self) -> float:
        return 0.5 * math.log1p(self.omega) / LOG2

    @property
    def gamma_bar(self) -> float:
        """Limit of the threshold as n grows: ln(1 + omega) / 2."""
        return 0.5 * math.log1p(self.omega)


@dataclass(frozen=True)
class ThresholdGeometry:
    gamma: float
    s_gamma: float
    c_gamma: float
    t_gamma: float
    lambda_prime: float
    lambda_: float
    omega: float


def make_threshold(gamma: float, params: ChannelParams) -> ThresholdGeometry:
    gamma = float(gamma)
    if not gamma > 0:
        raise ValueError(f"threshold gamma must be positive, got {gamma!r}")
    om = params.omega
    s = math.sinh(gamma)
    c = math.cosh(gamma)
    lp = om / (4.0 * s * s)
    lam = 0.5 * (1.0 + math.log1p(om) - lp * om / (1.0 + om))
    return ThresholdGeometry(gamma, s, c, math.tanh(gamma), lp, lam, om)


def threshold_from_lambda_prime(lambda_prime: float, params: ChannelParams) -> ThresholdGeometry:
    """Inverse of the gamma -> lambda' map."""
    if not lambda_prime > 0:
        raise ValueError("lambda' must be positive")
    return make_threshold(math.asinh(0.5 * math.sqrt(params.omega / lambda_prime)), params)


def _sinh_minus_x(d: float) -> float:
    if abs(d) < 0.1:
        d2 = d * d
        return d * d2 / 6.0 * (1 + d2 / 20 * (1 + d2 / 42 * (1 + d2 / 72 * (1 + d2 / 110 * (1 + d2 / 156)))))
    return math.sinh(d) - d


def alpha(x: float, geom: ThresholdGeometry) -> float:
    """cosh(gamma) - cosh(x) + sinh(gamma) (x - gamma), cancellation-free near gamma."""
    d = x - geom.gamma
    if abs(d) > 1.0:
        return geom.c_gamma - math.cosh(x) + geom.s_gamma * d
    sh = math.sinh(0.5 * d)
    return -2.0 * geom.c_gamma * sh * sh - geom.s_gamma * _sinh_minus_x(d)


@dataclass(frozen=True)
class KindGeometry:
    """Per-kind exponent data; ``pole_distance`` is exp(theta - gamma) - 1."""

    kind: Kind
    theta: float
    step_sign: int
    v: float
    pole_distance: float


def kind_geometry(geom: ThresholdGeometry, params: ChannelParams, kind) -> KindGeometry:
    kind = Kind(kind)
    theta = math.log(params.omega / (2.0 * geom.s_gamma))
    if kind is Kind.FA:
        theta -= math.log1p(params.omega)
    d = geom.gamma - theta
    step = int(d > 0) - int(d < 0)
    v = max(-alpha(theta, geom) / geom.s_gamma, 0.0)
    return KindGeometry(kind, theta, step, v, math.expm1(theta - geom.gamma))


def validity_window(params: ChannelParams) -> tuple[float, float]:
    """Thresholds for which both MD and FA probabilities stay below 1/2."""
    om = params.omega
    return 0.5 * math.log1p(om / (1.0 + om)), 0.5 * math.log1p(om)


def in_window(gamma: float, params: ChannelParams) -> bool:
    lo, hi = validity_window(params)
    return lo < gamma < hi


@dataclass(frozen=True)
class PathPoint:
    phi: float
    r: float
    r_prime: float
    u: float
    h: float
    h_prime: float
    g_tilde: float
    c_of_phi: float


def path_point(phi: float, geom: ThresholdGeometry, kindgeom: KindGeometry) -> PathPoint:
    """All descent-path quantities at a single angle in [0, pi)."""
    if not 0.0 <= phi < math.pi:
        raise ValueError(f"phi must lie in [0, pi), got {phi!r}")
    r, rp, h, gt, hp = (float(v[0]) for v in kernels.path_eval(np.array([phi]), geom.gamma, kindgeom.theta))
    u = math.sqrt(2.0 * h)
    if phi == 0.0:
        c_phi = gt / math.sqrt(geom.c_gamma)
    else:
        c_phi = gt * u / hp
    return PathPoint(phi, r, rp, u, h, hp, gt, c_phi)


def path_arrays(phi: np.ndarray, geom: ThresholdGeometry, kindgeom: KindGeometry) -> dict:
    """Vectorised :func:`path_point`, returned as a dict of arrays."""
    phi = np.asarray(phi, dtype=float)
    r, rp, h, gt, hp = kernels.path_eval(phi, geom.gamma, kindgeom.theta)
    u = np.sqrt(2.0 * h)
    with np.errstate(invalid="ignore", divide="ignore"):
        c_phi = np.where(phi == 0.0, gt / math.sqrt(geom.c_gamma), gt * u / hp)
    return {"phi": phi, "r": r, "r_prime": rp, "u": u, "h": h, "h_prime": hp, "g_tilde": gt, "c_of_phi": c_phi}


# ---------------------------------------------------------------------------
# integral along the descent path

# exp(-CUTOFF_EXPONENT) ~ 1.8e-35: the neglected tail beyond the cutoff angle
CUTOFF_EXPONENT = 80.0
_PHI_MAX = math.pi * (1.0 - 1e-15)


class ConvergenceError(RuntimeError):
    """Adaptive quadrature hit its refinement limit."""


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error: float
    panels: int
    cutoff: float


@lru_cache(maxsize=8)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def integration_cutoff(gamma: float, theta: float, scale: float) -> float:
    """Angle beyond which exp(-scale * h(phi)) < exp(-CUTOFF_EXPONENT)."""
    target = math.log(CUTOFF_EXPONENT / scale)

    def excess(phi):
        h = kernels.path_eval(np.array([phi]), gamma, theta)[2][0]
        return math.log(h) - target if h > 0 else -math.inf

    if excess(_PHI_MAX) <= 0.0:
        return _PHI_MAX
    # h ~ cosh(gamma) phi^2 / 2 near the origin gives a starting guess
    guess = min(math.sqrt(2.0 * CUTOFF_EXPONENT / (scale * math.cosh(gamma))), 0.5 * math.pi)
    lo = guess
    while excess(lo) > 0.0:
        lo *= 0.5
    hi = guess if lo < guess else _PHI_MAX
    if excess(hi) <= 0.0:
        hi = _PHI_MAX
    return bracketed_root(excess, lo, hi, xtol=1e-10).x


def _panel_sums(a: np.ndarray, b: np.ndarray, f, order: int) -> np.ndarray:
    x, w = _gauss_legendre(order)
    mid = 0.5 * (a + b)[:, None]
    half = 0.5 * (b - a)[:, None]
    nodes = mid + half * x[None, :]
    vals = f(nodes.ravel()).reshape(nodes.shape)
    return (vals * w[None, :]).sum(axis=1) * half[:, 0]


def g_integral(
    geom: ThresholdGeometry,
    kindgeom: KindGeometry,
    n: float,
    *,
    order: int = 16,
    rtol: float = 1e-13,
    max_rounds: int = 60,
) -> IntegralResult:
    """(1/pi) * integral over [0, pi) of g_tilde(phi) exp(-n u(phi)^2 / (4 sinh gamma)).

    Adaptive composite Gauss-Legendre: every panel is compared against its
    two halves and panels whose discrepancy is not negligible are split.
    The initial panels are refined geometrically towards phi = 0, where the
    Laplace peak (and, close to the pole, a narrow spike) lives.
    """
    if not n >= 1:
        raise ValueError("block-length must be >= 1")
    gamma, theta = geom.gamma, kindgeom.theta
    scale = n / (2.0 * geom.s_gamma)
    phi_c = integration_cutoff(gamma, theta, scale)

    def f(phi):
        return kernels.path_integrand(phi, gamma, theta, scale)

    width = min(1.0 / math.sqrt(scale * geom.c_gamma), abs(kindgeom.pole_distance), 1.0)
    levels = int(min(max(math.ceil(math.log2(phi_c / width)) + 2, 1), 60))
    edges = np.concatenate([[0.0], phi_c * 2.0 ** -np.arange(levels, -1, -1.0)])
    a, b = edges[:-1], edges[1:]

    done_val = 0.0
    done_err = 0.0
    for _ in range(max_rounds):
        mid = 0.5 * (a + b)
        coarse = _panel_sums(a, b, f, order)
        fine = _panel_sums(np.concatenate([a, mid]), np.concatenate([mid, b]), f, order)
        fine = fine[: len(a)] + fine[len(a):]
        err = np.abs(fine - coarse)
        total = done_val + fine.sum()
        budget = rtol * abs(total)
        if done_err + err.sum() <= budget:
            return IntegralResult(total / math.pi, (done_err + err.sum()) / math.pi,
                                  len(a), phi_c)
        # split panels carrying more than an equal share of the remaining budget;
        # a width-proportional share starves the narrow panels next to a pole
        share = 0.5 * max(budget - done_err, 0.0) / len(a)
        split = err > share
        if not split.any():
            split[np.argmax(err)] = True
        done_val += fine[~split].sum()
        done_err += err[~split].sum()
        a, b, mid = a[split], b[split], mid[split]
        if np.min(b - a) < 1e-15 * phi_c:
            break
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
    raise ConvergenceError(
        f"quadrature did not converge (gamma={gamma}, theta={theta}, n={n})"
    )


# ---------------------------------------------------------------------------
# probabilities

ORACLE_MAX_N = 512
AUTO_ORACLE_N = 64
AUTO_INTEGRAL_N = 2000
# auto mode keeps the series only if its smallest term is this small relative to g
AUTO_SERIES_RTOL = 1e-10
METHODS = ("auto", "oracle", "integral", "series", "closed_form")


def log_prob_oracle(geom: ThresholdGeometry, params: ChannelParams, kind, n: int) -> LogProb:
    if n > ORACLE_MAX_N:
        raise OracleRangeError(f"oracle is limited to n <= {ORACLE_MAX_N}, got {n}")
    om = params.omega
    lp = geom.lambda_prime
    if Kind(kind) is Kind.MD:
        return chi2_noncentral_cdf_oracle(n * lp, n, n / om, upper=True)
    return chi2_noncentral_cdf_oracle(n * lp / (1.0 + om), n, n * (1.0 + om) / om, upper=False)


def _combine(g: float, v: float, n: float, step: int) -> float:
    """log(step_term + g exp(-n v / 2)), step_term = 1 if step > 0 else 0."""
    if step > 0:
        if g >= 0:
            raise ArithmeticError("expected a negative correction above the step")
        return math.log1p(-math.exp(math.log(-g) - 0.5 * n * v))
    if g <= 0:
        raise ArithmeticError("expected a positive tail coefficient below the step")
    return math.log(g) - 0.5 * n * v


def _step(kind, kindgeom) -> int:
    # MD carries 1(s), FA carries 1(-s), s = sign(gamma - theta)
    s = kindgeom.step_sign
    return s if Kind(kind) is Kind.MD else -s


def _signed(kind, g: float) -> float:
    # the FA probability is 1(-s) - g exp(-n v / 2)
    return g if Kind(kind) is Kind.MD else -g


def log_prob_integral(geom: ThresholdGeometry, params: ChannelParams, kind, n: float) -> LogProb:
    kg = kind_geometry(geom, params, kind)
    if abs(kg.pole_distance) < POLE_GUARD:
        raise PoleError("threshold sits on the pole of the integrand")
    res = g_integral(geom, kg, n)
    return LogProb(_combine(_signed(kind, res.value), kg.v, n, _step(kind, kg)), method="integral")


def _series_raw(geom, params, kind, n, K):
    from .series_engine import K_DEFAULT, build_coefficients, g_series

    if not in_window(geom.gamma, params):
        raise WindowError(f"gamma={geom.gamma} outside the validity window")
    kg = kind_geometry(geom, params, kind)
    ncoef = K_DEFAULT + 1 if K == "auto" else min(int(K) + 1, 32)
    tables = build_coefficients(geom, kg.theta, ncoef)
    res = g_series(tables, geom, n, K)
    g = _signed(kind, res.g_value)
    logp = math.log(g) - 0.5 * n * kg.v if g > 0 else math.nan
    return logp, res


def log_prob_series(geom: ThresholdGeometry, params: ChannelParams, kind, n: float, K="auto"):
    """Series evaluation; returns ``(LogProb, SeriesResult)``.

    Raises ArithmeticError where the partial sum is not a probability,
    which happens close to the pole when ``n`` is too small for the series.
    """
    logp, res = _series_raw(geom, params, kind, n, K)
    if not logp <= 0.0:
        raise ArithmeticError(f"series partial sum is not a probability (log = {logp!r})")
    return LogProb(logp, method="series", terms=res.truncation_index), res


def log_prob(
    geom: ThresholdGeometry,
    params: ChannelParams,
    kind,
    n: float,
    method: str = "auto",
    K="auto",
) -> LogProb:
    """log P_MD or log P_FA at threshold ``geom``.

    ``K`` is the series truncation ("auto" or a count) for ``series`` and
    the order (1 or 2) for ``closed_form``.
    """
    kind = Kind(kind)
    if method == "oracle":
        return log_prob_oracle(geom, params, kind, int(n))
    if method == "integral":
        return log_prob_integral(geom, params, kind, n)
    if method == "series":
        return log_prob_series(geom, params, kind, n, K)[0]
    if method == "closed_form":
        from .series_engine import closed_form_logprob

        return closed_form_logprob(geom, params, kind, n, 1 if K == "auto" else int(K))
    if method != "auto":
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")

    inside = in_window(geom.gamma, params)
    if n <= AUTO_ORACLE_N or (not inside and n <= ORACLE_MAX_N and n == int(n)):
        return log_prob_oracle(geom, params, kind, int(n))
    if not inside or n <= AUTO_INTEGRAL_N:
        return log_prob_integral(geom, params, kind, n)
    try:
        logp, res = _series_raw(geom, params, kind, n, "auto")
    except PoleError:
        return log_prob_integral(geom, params, kind, n)
    if not logp <= 0.0 or res.smallest_term_magnitude > AUTO_SERIES_RTOL * abs(res.g_value):
        return log_prob_integral(geom, params, kind, n)
    # rate floor 3/n: a false-alarm probability above 2^-3 is handled by the integral
    if kind is Kind.FA and logp > -3.0 * math.log(2.0):
        return log_prob_integral(geom, params, kind, n)
    return LogProb(logp, method="series", terms=res.truncation_index)
