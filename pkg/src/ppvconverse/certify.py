"""Numerical certification of truncated-series bounds on the descent path.

With ``T_M(u) = 1 + sum_{k=1}^{M-1} (c_{2k}/c_0) u^{2k}`` the condition

    T_L(u(phi)) <= c(phi)/c_0 <= T_U(u(phi))   for all phi in [0, pi)

for both kinds implies that the L-term series is a lower bound and the
U-term series an upper bound of the probabilities.  The check runs on a
finite grid, so a passing certificate is numerical evidence, not a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import WindowError
from .series_engine import K_HARD_CAP, build_coefficients
from .temme_core import ChannelParams, Kind, ThresholdGeometry, in_window, kind_geometry, path_arrays

__all__ = [
    "Certificate",
    "certification_grid",
    "c_ratio_profile",
    "sandwich_margins",
    "certify_sandwich",
    "bbar_bound",
    "dm8_bracket",
]

# near phi = 0 the slack is a convergent Taylor remainder far below roundoff;
# it is summed directly while its leading term is below this size
_REMAINDER_SWITCH = 1e-6
_REMAINDER_TERMS = 8


@dataclass(frozen=True)
class Certificate:
    L: int
    U: int
    holds: bool
    holds_md: bool
    holds_fa: bool
    phi_grid_size: int
    worst_margin: float
    worst_phi: float
    worst_kind: str


def certification_grid(grid_size: int = 2048, edge_nodes: int = 64) -> np.ndarray:
    """Uniform midpoints on (0, pi) plus geometric clusters towards 0 and pi."""
    uniform = math.pi * (np.arange(grid_size) + 0.5) / grid_size
    if edge_nodes <= 0:
        return uniform
    offsets = math.pi * np.logspace(-8.0, math.log10(0.5 / grid_size), edge_nodes)
    return np.unique(np.concatenate([offsets, uniform, math.pi - offsets]))


def c_ratio_profile(geom: ThresholdGeometry, kindgeom, phi_grid) -> np.ndarray:
    """c(phi)/c_0 on the grid; the phi = 0 limit is exactly 1."""
    arr = path_arrays(np.asarray(phi_grid, dtype=float), geom, kindgeom)
    c0 = 1.0 / (math.sqrt(geom.c_gamma) * kindgeom.pole_distance)
    ratio = arr["c_of_phi"] / c0
    return np.where(arr["phi"] == 0.0, 1.0, ratio)


def _partial(ratios: np.ndarray, u2: np.ndarray, M: int) -> np.ndarray:
    out = np.ones_like(u2)
    pw = np.ones_like(u2)
    for k in range(1, M):
        pw = pw * u2
        out = out + ratios[k] * pw
    return out


def _remainder(ratios: np.ndarray, u2: np.ndarray, M: int):
    """sum_{k=M}^{M+7} ratios[k] u^{2k} and a mask of where it is trustworthy.

    Trusted where the terms shrink at least geometrically (ratio q <= 1/2)
    and the geometric tail estimate beyond the last term is below 1% of
    the leading term.
    """
    top = min(M + _REMAINDER_TERMS, len(ratios))
    if top - M < 2:
        return np.zeros_like(u2), np.zeros(u2.shape, dtype=bool)
    terms = np.array([ratios[k] * u2**k for k in range(M, top)])
    lead = np.abs(terms[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        # terms that underflow to zero count as perfect decay
        q = np.max(np.where(terms[:-1] != 0.0, np.abs(terms[1:]) / np.abs(terms[:-1]), 0.0), axis=0)
        tail = np.abs(terms[-1]) * q / (1.0 - q)
    usable = (lead < _REMAINDER_SWITCH) & (q <= 0.5) & (tail <= 1e-2 * lead)
    return terms.sum(axis=0), usable


def sandwich_margins(geom, kindgeom, ratios, phi, L: int, U: int):
    """Scaled slacks (lower, upper) of the sandwich condition at each node."""
    arr = path_arrays(phi, geom, kindgeom)
    u2 = arr["u"] ** 2
    with np.errstate(over="ignore", invalid="ignore"):
        c0 = 1.0 / (math.sqrt(geom.c_gamma) * kindgeom.pole_distance)
        prof = np.where(arr["phi"] == 0.0, 1.0, arr["c_of_phi"] / c0)
        TL = _partial(ratios, u2, L)
        TU = _partial(ratios, u2, U)
        low = prof - TL
        up = TU - prof
        rem_l, ok_l = _remainder(ratios, u2, L)
        rem_u, ok_u = _remainder(ratios, u2, U)
        low = np.where(ok_l, rem_l, low)
        up = np.where(ok_u, -rem_u, up)
        low = low / np.maximum(1.0, np.abs(TL))
        up = up / np.maximum(1.0, np.abs(TU))
    return np.nan_to_num(low, nan=-np.inf), np.nan_to_num(up, nan=-np.inf)


def certify_sandwich(
    geom: ThresholdGeometry,
    params: ChannelParams,
    n: float,
    L: int,
    U: int,
    grid_size: int = 2048,
    edge_nodes: int = 64,
) -> Certificate:
    """Check the L-term lower / U-term upper sandwich for both kinds.

    The condition does not depend on ``n``; it is accepted for the record
    of which evaluation the certificate backs.
    """
    if L < 1 or U < 1:
        raise ValueError("L and U must be >= 1")
    if not in_window(geom.gamma, params):
        raise WindowError(f"gamma={geom.gamma} outside the validity window")
    phi = certification_grid(grid_size, edge_nodes)
    ncoef = min(max(L, U) + _REMAINDER_TERMS, K_HARD_CAP)
    if max(L, U) > ncoef:
        raise ValueError(f"L and U must not exceed {K_HARD_CAP}")
    worst = (math.inf, math.nan, "")
    flags = {}
    for kind in (Kind.MD, Kind.FA):
        kg = kind_geometry(geom, params, kind)
        tables = build_coefficients(geom, kg.theta, ncoef)
        ratios = tables.c_even / tables.c_even[0]
        low, up = sandwich_margins(geom, kg, ratios, phi, L, U)
        m = np.minimum(low, up)
        i = int(np.argmin(m))
        flags[kind] = bool(m[i] >= 0.0)
        if m[i] < worst[0]:
            worst = (float(m[i]), float(phi[i]), kind.value)
    return Certificate(
        L=L,
        U=U,
        holds=flags[Kind.MD] and flags[Kind.FA],
        holds_md=flags[Kind.MD],
        holds_fa=flags[Kind.FA],
        phi_grid_size=len(phi),
        worst_margin=worst[0],
        worst_phi=worst[1],
        worst_kind=worst[2],
    )


def _r_rp(phi: np.ndarray, gamma: float):
    # r and r' do not depend on theta; any value away from the pole will do
    r, rp, *_ = kernels.path_eval(phi, gamma, gamma + 1.0)
    return r, rp


def bbar_bound(geom: ThresholdGeometry, phi) -> np.ndarray:
    """Majorant b(phi) of c(phi)/c_0 used to show the one-term bound."""
    phi = np.asarray(phi, dtype=float)
    if np.any((phi < 0) | (phi >= math.pi)):
        raise ValueError("phi must lie in [0, pi)")
    r, rp = _r_rp(np.atleast_1d(phi), geom.gamma)
    half = 0.5 * np.atleast_1d(phi)
    sinc_half = np.sinc(half / math.pi)
    # sqrt(c_gamma / cosh r) e^{r - gamma}, written to avoid overflowing cosh
    ratio = np.sqrt(2.0 * geom.c_gamma / (1.0 + np.exp(-2.0 * r))) * np.exp(0.5 * r - geom.gamma)
    out = sinc_half / (1.0 + rp * rp) * ratio
    # r(0) = gamma and r'(0) = 0, so the value there is 1 without rounding
    out = np.where(np.atleast_1d(phi) == 0.0, 1.0, out)
    return out.reshape(phi.shape)


def dm8_bracket(geom: ThresholdGeometry, phi):
    """(lower, middle, upper) with middle = e^{r - gamma} sinc(phi)."""
    phi = np.asarray(phi, dtype=float)
    sinc = np.sinc(np.atleast_1d(phi) / math.pi)
    s = geom.s_gamma
    eg = math.exp(-geom.gamma)
    # (c - s)/(c + s) = e^{-2 gamma}; e^r sinc = s + sqrt(s^2 + sinc^2) since sinh r = s / sinc
    lower = 1.0 - eg * eg * (1.0 - sinc * sinc)
    middle = eg * (s + np.sqrt(s * s + sinc * sinc))
    return lower.reshape(phi.shape), middle.reshape(phi.shape), np.ones_like(phi)
