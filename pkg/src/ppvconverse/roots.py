"""Bracketed scalar solvers used throughout the package.

Everything here assumes the caller already holds a sign-change bracket
(root finding) or a unimodal interval (maximisation).  Both solvers are
deliberately simple: the functions they are applied to are monotone or
unimodal by construction, and robustness matters more than raw speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable


class BracketError(ValueError):
    """Raised when the supplied interval does not bracket a sign change."""


@dataclass(frozen=True)
class RootResult:
    x: float
    fx: float
    iterations: int
    converged: bool


def bracketed_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    flo: float | None = None,
    fhi: float | None = None,
    xtol: float = 1e-15,
    ftol: float = 0.0,
    maxiter: int = 200,
) -> RootResult:
    """Find a zero of ``f`` inside ``[lo, hi]``.

    Illinois-modified regula falsi with a bisection safeguard: a secant
    step is tried first, and whenever two consecutive steps fail to halve
    the bracket the next step is a plain bisection.  ``xtol`` is relative
    to the bracket magnitude; ``ftol`` is an absolute residual tolerance.
    """
    if flo is None:
        flo = f(lo)
    if fhi is None:
        fhi = f(hi)
    if flo == 0.0:
        return RootResult(lo, flo, 0, True)
    if fhi == 0.0:
        return RootResult(hi, fhi, 0, True)
    if math.isnan(flo) or math.isnan(fhi) or (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]: f={flo!r}, {fhi!r}")

    # weights for the Illinois modification
    wlo, whi = flo, fhi
    side = 0
    width = hi - lo
    stalls = 0
    x, fx = lo, flo
    for it in range(1, maxiter + 1):
        if stalls >= 2:
            x = 0.5 * (lo + hi)
            stalls = 0
        else:
            x = hi - whi * (hi - lo) / (whi - wlo)
            # keep secant iterates off the bracket ends
            margin = 1e-3 * (hi - lo)
            if not (lo + margin < x < hi - margin):
                x = 0.5 * (lo + hi)
        fx = f(x)
        if fx == 0.0 or abs(fx) <= ftol:
            return RootResult(x, fx, it, True)
        if (fx > 0) == (flo > 0):
            lo, flo, wlo = x, fx, fx
            if side == -1:
                whi *= 0.5
            side = -1
        else:
            hi, fhi, whi = x, fx, fx
            if side == 1:
                wlo *= 0.5
            side = 1
        new_width = hi - lo
        stalls = stalls + 1 if new_width > 0.5 * width else 0
        width = new_width
        if width <= xtol * max(abs(lo), abs(hi), 1e-300):
            break
    else:
        return RootResult(x, fx, maxiter, False)
    # report the better of the two ends
    if abs(flo) < abs(fhi):
        return RootResult(lo, flo, it, True)
    return RootResult(hi, fhi, it, True)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    rtol: float = 1e-6,
    maxiter: int = 200,
) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if abs(b - a) <= rtol * max(abs(a), abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)
