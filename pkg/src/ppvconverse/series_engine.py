"""Taylor coefficients of the uniform expansion and its partial sums.

The expansion variable is the descent coordinate ``u``; the coefficients
``c_{2k}`` of ``f(u) = c(u)`` come from a chain of series compositions and
one reversion.  The production path works in a rescaled real variable
``x = e^gamma (1 + eps)`` so no factor ``exp(+-n gamma)`` is ever formed,
and purely imaginary coefficients are carried as their real payload:

* even index: the real part,
* odd index: the coefficient of ``i``.

``build_coefficients_complex`` runs the same chain literally in complex
arithmetic and is kept as a debug cross-check.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from ._kernels_py import power_table as _generic_power_table
from .errors import PoleError, TwoTermBreakdown, WindowError
from .specfun import LogProb
from .temme_core import POLE_GUARD, ChannelParams, Kind, ThresholdGeometry, in_window, kind_geometry

__all__ = [
    "K_DEFAULT",
    "K_HARD_CAP",
    "POLE_GUARD",
    "CoefficientTables",
    "SeriesResult",
    "compose_series_power",
    "build_coefficients",
    "build_coefficients_complex",
    "g_series",
    "series_terms",
    "g0",
    "g1",
    "closed_form_log",
    "closed_form_logprob",
]

K_DEFAULT = 21
K_HARD_CAP = 32

# real payload of (-i)^n and i^j, indexed by n % 4 and j % 4
_MINUS_I_PAYLOAD = np.array([1.0, -1.0, -1.0, 1.0])
_I_PAYLOAD = np.array([1.0, 1.0, -1.0, -1.0])


def compose_series_power(inner, j: int, order: int | None = None) -> np.ndarray:
    """Coefficients 0..order of ``(sum_{m>=1} inner[m] u^m) ** j``.

    ``inner[0]`` is ignored (the inner series has no constant term).
    """
    inner = np.asarray(inner, dtype=float)
    if j < 1:
        raise ValueError("power must be >= 1")
    if order is None:
        order = len(inner) - 1
    if len(inner) < 2 or inner[1] == 0.0:
        raise ValueError("inner series needs a nonzero linear coefficient")
    padded = np.zeros(max(order, j) + 1)
    m = min(len(inner), len(padded))
    padded[:m] = inner[:m]
    table = np.asarray(kernels.power_table(padded, max(order, j)))
    return table[j, : order + 1].copy()


@lru_cache(maxsize=4)
def _log_powers(N: int) -> np.ndarray:
    # powers of log(1 + eps) = eps - eps^2/2 + eps^3/3 - ...
    inner = np.zeros(N + 1)
    m = np.arange(1, N + 1)
    inner[1:] = (-1.0) ** (m + 1) / m
    table = np.asarray(kernels.power_table(inner, N))
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class CoefficientTables:
    """Output of the coefficient pipeline for one (gamma, theta) pair.

    Index ``n`` of every sequence is the power of the expansion variable.
    ``beta``, ``t_coeffs``, ``xi``, ``P_table`` and ``S_table`` hold real
    payloads (see module docstring); ``c_even[k]`` is ``c_{2k}``.
    """

    K_max: int
    gamma: float
    theta: float
    pole_distance: float
    alpha_taylor: np.ndarray
    Q_table: np.ndarray
    nu: np.ndarray
    beta: np.ndarray
    t_coeffs: np.ndarray
    P_table: np.ndarray
    S_table: np.ndarray
    xi: np.ndarray
    c_even: np.ndarray
    # rescaled internals: beta_tilde[n] = b_n e^{n gamma}, rho_tilde[n] such that
    # x(z) = e^gamma (1 + sum rho_tilde[n] z^n), f_coeffs[n] the Taylor coefficients of
    # the real function F(z) with c_n = -(-1)^(n/2) F_n for even n
    beta_tilde: np.ndarray
    rho_tilde: np.ndarray
    f_coeffs: np.ndarray

    @property
    def c0(self) -> float:
        return float(self.c_even[0])


def build_coefficients(geom: ThresholdGeometry, theta: float, K: int = K_DEFAULT) -> CoefficientTables:
    """Run the coefficient chain and return ``c_{2k}`` for ``k = 0..K-1``."""
    K = int(K)
    if not 1 <= K <= K_HARD_CAP:
        raise ValueError(f"K must lie in 1..{K_HARD_CAP}, got {K}")
    gamma = geom.gamma
    D = math.expm1(theta - gamma)
    if not abs(D) >= POLE_GUARD:
        raise PoleError(f"|exp(theta - gamma) - 1| = {abs(D):.3g} is below {POLE_GUARD:g}")
    s, c = geom.s_gamma, geom.c_gamma
    M = 2 * (K - 1)  # highest coefficient of F needed
    N = M + 2

    # Taylor coefficients of alpha(x) around gamma
    alpha_t = np.zeros(N + 1)
    for k in range(2, N + 1):
        alpha_t[k] = -(c if k % 2 == 0 else s) / math.factorial(k)

    # nu_tilde[n]: coefficients of alpha(gamma + log(1 + eps)) in eps
    Q = _log_powers(N)
    nu_t = alpha_t[: N + 1] @ Q  # nu_t[n] = sum_j alpha_j Q[j, n]
    nu_t[:2] = 0.0

    # beta(x) = i b(x) with b^2 / 2 = -nu: b_1 = -sqrt(c), then the square-root recursion
    bt = np.zeros(N)
    bt[1] = -math.sqrt(c)
    for n in range(2, N):
        acc = nu_t[n + 1]
        for k in range(2, n):
            acc += 0.5 * bt[k] * bt[n + 1 - k]
        bt[n] = -acc / bt[1]

    # reversion eps = R(z) of z = b(eps), z = -i u
    Nr = M + 1
    p = np.asarray(kernels.power_table(bt[: Nr + 1], Nr))
    rho = np.zeros(Nr + 1)
    rho[1] = 1.0 / bt[1]
    for n in range(2, Nr + 1):
        acc = 0.0
        for j in range(1, n):
            acc += rho[j] * p[j, n]
        rho[n] = -acc / bt[1] ** n

    # X(z) = 1 / (D - R(z)) = sum_j R^j / D^(j+1)
    sp = np.asarray(kernels.power_table(rho[: M + 1], M)) if M >= 1 else np.zeros((1, 1))
    X = np.zeros(M + 1)
    X[0] = 1.0 / D
    for n in range(1, M + 1):
        acc = 0.0
        for j in range(1, n + 1):
            acc += sp[j, n] / D ** (j + 1)
        X[n] = acc

    # F(z) = R'(z) X(z)
    F = np.zeros(M + 1)
    for n in range(M + 1):
        acc = 0.0
        for k in range(n + 1):
            acc += (k + 1) * rho[k + 1] * X[n - k]
        F[n] = acc
    c_even = np.array([-((-1.0) ** k) * F[2 * k] for k in range(K)])

    # unscaled tables, stored as real payloads
    eg = math.exp(gamma)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        idx_N = np.arange(N + 1)
        nu = nu_t * np.exp(-idx_N * gamma)
        idx_b = np.arange(N)
        beta = bt * np.exp(-idx_b * gamma)
        idx_r = np.arange(Nr + 1)
        t_coeffs = eg * rho * _MINUS_I_PAYLOAD[idx_r % 4]
        t_coeffs[0] = eg
        P_table = (
            p
            * np.exp(-idx_r * gamma)[None, :]
            * _I_PAYLOAD[idx_r % 4][:, None]
        )
        idx_m = np.arange(M + 1)
        S_table = (
            sp
            * np.exp(idx_m[: sp.shape[0]] * gamma)[:, None]
            * _MINUS_I_PAYLOAD[idx_m[: sp.shape[1]] % 4][None, :]
        )
        xi = X / eg * _MINUS_I_PAYLOAD[idx_m % 4]

    return CoefficientTables(
        K_max=K,
        gamma=gamma,
        theta=theta,
        pole_distance=D,
        alpha_taylor=alpha_t,
        Q_table=np.array(Q),
        nu=nu,
        beta=beta,
        t_coeffs=t_coeffs,
        P_table=P_table,
        S_table=S_table,
        xi=xi,
        c_even=c_even,
        beta_tilde=bt,
        rho_tilde=rho,
        f_coeffs=F,
    )


def build_coefficients_complex(geom: ThresholdGeometry, theta: float, K: int) -> list[complex]:
    """Debug path: the coefficient chain in unscaled complex arithmetic.

    Returns the complex ``c_{2k}``; their imaginary parts should vanish up
    to rounding.  Slow and prone to overflow for large ``gamma * K``.
    """
    gamma = geom.gamma
    s, c = geom.s_gamma, geom.c_gamma
    eg = math.exp(gamma)
    M = 2 * (K - 1)
    N = M + 2
    alpha_t = [0j] * (N + 1)
    for k in range(2, N + 1):
        alpha_t[k] = complex(-(c if k % 2 == 0 else s) / math.factorial(k))
    # log(x / e^gamma) = log(1 + w / e^gamma) as a series in w = x - e^gamma
    inner = [0j] + [complex((-1) ** (m + 1) / (m * eg**m)) for m in range(1, N + 1)]
    Q = _generic_power_table(inner, N)
    nu = [sum(alpha_t[j] * Q[j][n] for j in range(2, n + 1)) for n in range(N + 1)]
    # beta^2 / 2 = nu, choosing beta_1 = -i sqrt(c) e^{-gamma}
    beta = [0j] * N
    beta[1] = -cmath.sqrt(2 * nu[2])
    for n in range(2, N):
        acc = nu[n + 1] - 0.5 * sum(beta[k] * beta[n + 1 - k] for k in range(2, n))
        beta[n] = acc / beta[1]
    # reversion t(u): x - e^gamma as a series in u where beta(x) = u
    Nr = M + 1
    P = _generic_power_table(beta[: Nr + 1], Nr)
    t = [0j] * (Nr + 1)
    t[1] = 1 / beta[1]
    for n in range(2, Nr + 1):
        t[n] = -sum(t[j] * P[j][n] for j in range(1, n)) / beta[1] ** n
    S = _generic_power_table(t[: M + 1], M) if M >= 1 else [[0j]]
    d = math.exp(theta) - eg
    xi = [1 / d] + [sum(S[j][n] / d ** (j + 1) for j in range(1, n + 1)) for n in range(1, M + 1)]
    # g(x) dx/du with g = 1/(e^theta - x); f_n = i c_n
    f = [sum((k + 1) * t[k + 1] * xi[n - k] for k in range(n + 1)) for n in range(M + 1)]
    return [f[2 * k] / 1j for k in range(K)]


@dataclass(frozen=True)
class SeriesResult:
    g_value: float
    terms: np.ndarray
    truncation_index: int
    smallest_term_magnitude: float
    first_neglected: float


def series_terms(c_even: np.ndarray, s_gamma: float, n: float) -> np.ndarray:
    """tau_k = c_{2k} (Gamma(k+1/2)/Gamma(1/2)) (4 s / n)^(k+1/2) / (2 sqrt(pi))."""
    c_even = np.asarray(c_even, dtype=float)
    x = 4.0 * s_gamma / n
    out = np.empty(len(c_even))
    gr = 1.0
    pw = math.sqrt(x) / (2.0 * math.sqrt(math.pi))
    for k in range(len(c_even)):
        out[k] = c_even[k] * gr * pw
        gr *= k + 0.5
        pw *= x
    return out


def g_series(tables: CoefficientTables, geom: ThresholdGeometry, n: float, K="auto") -> SeriesResult:
    """Partial sum of the uniform expansion of g.

    ``K`` an integer sums the first K terms.  ``"auto"`` stops before the
    smallest-magnitude term among indices 1..min(21, available - 1).
    """
    if not n >= 1:
        raise ValueError("block-length must be >= 1")
    terms = series_terms(tables.c_even, geom.s_gamma, n)
    if K == "auto":
        kmax = min(K_DEFAULT, len(terms) - 1)
        if kmax < 1:
            raise ValueError("auto truncation needs at least two coefficients")
        mags = np.abs(terms[1 : kmax + 1])
        k_star = 1 + int(np.argmin(mags))
        neglected = float(terms[k_star])
        used = terms[:k_star]
        smallest = float(abs(terms[k_star]))
        index = k_star
    else:
        K = int(K)
        if not 1 <= K <= len(terms):
            raise ValueError(f"K must lie in 1..{len(terms)}")
        used = terms[:K]
        neglected = float(terms[K]) if K < len(terms) else math.nan
        smallest = float(np.min(np.abs(used)))
        index = K
    return SeriesResult(float(math.fsum(used)), terms, index, smallest, neglected)


def g0(geom: ThresholdGeometry, kindgeom) -> float:
    """Leading coefficient: sqrt(tanh(gamma)/pi) / (exp(theta - gamma) - 1)."""
    return math.sqrt(geom.t_gamma / math.pi) / kindgeom.pole_distance


def g1(geom: ThresholdGeometry, kindgeom) -> float:
    """Relative first correction, so that g ~ g0 (1 - g1/n) / sqrt(n)."""
    t = geom.t_gamma
    d = kindgeom.pole_distance
    return t * ((9.0 - 12.0 * t + 5.0 * t * t) / 12.0 + (2.0 + (3.0 - t) * d) / (d * d))


def closed_form_log(geom: ThresholdGeometry, params: ChannelParams, kind, n: float, order: int = 1) -> float:
    """Natural log of the one- or two-term asymptotic form.

    Unlike :func:`closed_form_logprob` the value may exceed 0: close to the
    pole the one-term form is an upper bound larger than 1.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if not in_window(geom.gamma, params):
        raise WindowError(f"gamma={geom.gamma} outside the validity window")
    kg = kind_geometry(geom, params, kind)
    lead = g0(geom, kg)
    if Kind(kind) is Kind.FA:
        lead = -lead
    if not lead > 0:
        raise WindowError("leading coefficient has the wrong sign for this kind")
    logp = -0.5 * n * kg.v - 0.5 * math.log(n) + math.log(lead)
    if order == 2:
        ratio = g1(geom, kg) / n
        if ratio >= 1.0:
            raise TwoTermBreakdown(f"g1/n = {ratio:.3g} >= 1")
        logp += math.log1p(-ratio)
    return logp


def closed_form_logprob(geom: ThresholdGeometry, params: ChannelParams, kind, n: float, order: int = 1) -> LogProb:
    """One- or two-term asymptotic log-probability inside the validity window."""
    return LogProb(closed_form_log(geom, params, kind, n, order), method="closed_form", terms=order)
