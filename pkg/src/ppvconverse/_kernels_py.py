"""Pure-Python/numpy versions of the hot kernels.

These mirror ``_kernels.pyx`` one for one and are selected automatically
when the compiled extension is missing.  ``power_table`` is written with
plain Python arithmetic so it also runs on ``mpmath`` numbers.
"""

from __future__ import annotations

import numpy as np

# Taylor tails, used below 0.1 where the direct forms cancel
# phi - sin(phi) = phi^3/6 (1 - phi^2/20 (1 - phi^2/42 (1 - ...)))
# 1/phi - cot(phi) = phi/3 + phi^3/45 + 2 phi^5/945 + phi^7/4725 + 2 phi^9/93555
_SMALL = 0.1


def _phi_minus_sin(phi):
    p2 = phi * phi
    series = phi * p2 / 6.0 * (1 - p2 / 20 * (1 - p2 / 42 * (1 - p2 / 72 * (1 - p2 / 110 * (1 - p2 / 156)))))
    with np.errstate(invalid="ignore"):
        direct = phi - np.sin(phi)
    return np.where(phi < _SMALL, series, direct)


def _inv_minus_cot(phi):
    p2 = phi * phi
    series = phi * (1 / 3 + p2 * (1 / 45 + p2 * (2 / 945 + p2 * (1 / 4725 + p2 * 2 / 93555))))
    safe = np.where(phi < _SMALL, 1.0, phi)
    direct = 1.0 / safe - np.cos(safe) / np.sin(safe)
    return np.where(phi < _SMALL, series, direct)


def _sinh_minus_x(d):
    d2 = d * d
    series = d * d2 / 6.0 * (1 + d2 / 20 * (1 + d2 / 42 * (1 + d2 / 72 * (1 + d2 / 110 * (1 + d2 / 156)))))
    return np.where(np.abs(d) < _SMALL, series, np.sinh(d) - d)


def path_eval(phi, gamma, theta):
    """Descent-path quantities at each node of ``phi`` (0 <= phi < pi).

    Returns ``(r, r_prime, h, g_tilde, h_prime)``; the removable limits are
    used at ``phi == 0``.
    """
    phi = np.asarray(phi, dtype=float)
    s = np.sinh(gamma)
    c = np.cosh(gamma)
    zero = phi == 0.0
    ph = np.where(zero, 1.0, phi)

    sin_p = np.sin(ph)
    sinc = sin_p / ph
    half = np.sin(0.5 * ph)
    one_minus_cos = 2.0 * half * half
    # a - s where a = s/sinc, computed without cancellation
    amb = s * _phi_minus_sin(ph) / sin_p
    a = s + amb
    cosh_r = np.sqrt(1.0 + a * a)
    delta = np.log1p(amb * (1.0 + (a + s) / (cosh_r + c)) / (s + c))
    r = gamma + delta
    rp = _inv_minus_cot(ph) / np.sqrt(1.0 + (sinc / s) ** 2)
    # alpha(gamma + delta) = -c (cosh(delta) - 1) - s (sinh(delta) - delta)
    sh = np.sinh(0.5 * delta)
    alpha_r = -2.0 * c * sh * sh - s * _sinh_minus_x(delta)
    h = np.maximum(one_minus_cos * cosh_r + alpha_r, 0.0)

    # theta - r as (theta - gamma) - delta: differencing r itself adds noise near the pole
    d = (theta - gamma) - delta
    em1 = np.expm1(d)
    e = 1.0 + em1
    num = em1 + e * (rp * sin_p - one_minus_cos)
    den = em1 * em1 + 2.0 * one_minus_cos * e
    gt = num / den
    hp = sin_p * cosh_r * (1.0 + rp * rp)

    if np.any(zero):
        r = np.where(zero, gamma, r)
        rp = np.where(zero, 0.0, rp)
        h = np.where(zero, 0.0, h)
        gt = np.where(zero, 1.0 / np.expm1(theta - gamma), gt)
        hp = np.where(zero, 0.0, hp)
    return r, rp, h, gt, hp


def path_integrand(phi, gamma, theta, scale):
    """g_tilde(phi) * exp(-scale * h(phi)); ``scale`` is n / (2 sinh(gamma))."""
    _, _, h, gt, _ = path_eval(phi, gamma, theta)
    return gt * np.exp(-scale * h)


def power_table(inner, N):
    """Coefficients of ``(sum_{m>=1} inner[m] u^m) ** j``.

    Returns a nested list ``T`` with ``T[j][n]`` the coefficient of ``u^n``
    for ``1 <= j <= n <= N`` (zeros elsewhere).  ``inner[0]`` is ignored.
    """
    a1 = inner[1]
    zero = a1 * 0
    ratio = [zero] * (N + 1)
    for l in range(1, N):
        ratio[l] = inner[l + 1] / a1
    T = [[zero] * (N + 1) for _ in range(N + 1)]
    for j in range(1, N + 1):
        row = T[j]
        row[j] = a1**j
        for n in range(j + 1, N + 1):
            k = n - j
            acc = zero
            for l in range(1, k + 1):
                acc += (l * j - n + j + l) * ratio[l] * row[n - l]
            row[n] = acc / k
    return T
