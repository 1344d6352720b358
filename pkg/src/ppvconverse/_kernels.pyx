# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the descent-path integrand and the series-power
recursion.  Semantics are identical to ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sinh, cosh, sqrt, exp, expm1, log1p, fabs

cnp.import_array()

cdef double SMALL = 0.1


cdef inline double phi_minus_sin(double p) nogil:
    cdef double p2
    if p < SMALL:
        p2 = p * p
        return p * p2 / 6.0 * (1 - p2 / 20 * (1 - p2 / 42 * (1 - p2 / 72 * (1 - p2 / 110 * (1 - p2 / 156)))))
    return p - sin(p)


cdef inline double inv_minus_cot(double p) nogil:
    cdef double p2
    if p < SMALL:
        p2 = p * p
        return p * (1.0 / 3 + p2 * (1.0 / 45 + p2 * (2.0 / 945 + p2 * (1.0 / 4725 + p2 * 2.0 / 93555))))
    return 1.0 / p - cos(p) / sin(p)


cdef inline double sinh_minus_x(double d) nogil:
    cdef double d2
    if fabs(d) < SMALL:
        d2 = d * d
        return d * d2 / 6.0 * (1 + d2 / 20 * (1 + d2 / 42 * (1 + d2 / 72 * (1 + d2 / 110 * (1 + d2 / 156)))))
    return sinh(d) - d


cdef void _point(double phi, double gamma, double theta, double s, double c,
                 double* r, double* rp, double* h, double* gt, double* hp) nogil:
    cdef double sin_p, sinc, half, omc, amb, a, cosh_r, delta, sh, alpha_r, e, em1
    if phi == 0.0:
        r[0] = gamma
        rp[0] = 0.0
        h[0] = 0.0
        gt[0] = 1.0 / expm1(theta - gamma)
        hp[0] = 0.0
        return
    sin_p = sin(phi)
    sinc = sin_p / phi
    half = sin(0.5 * phi)
    omc = 2.0 * half * half
    amb = s * phi_minus_sin(phi) / sin_p
    a = s + amb
    cosh_r = sqrt(1.0 + a * a)
    delta = log1p(amb * (1.0 + (a + s) / (cosh_r + c)) / (s + c))
    r[0] = gamma + delta
    rp[0] = inv_minus_cot(phi) / sqrt(1.0 + (sinc / s) * (sinc / s))
    sh = sinh(0.5 * delta)
    alpha_r = -2.0 * c * sh * sh - s * sinh_minus_x(delta)
    h[0] = omc * cosh_r + alpha_r
    if h[0] < 0.0:
        h[0] = 0.0
    # theta - r as (theta - gamma) - delta: differencing r itself adds noise near the pole
    em1 = expm1((theta - gamma) - delta)
    e = 1.0 + em1
    gt[0] = (em1 + e * (rp[0] * sin_p - omc)) / (em1 * em1 + 2.0 * omc * e)
    hp[0] = sin_p * cosh_r * (1.0 + rp[0] * rp[0])


def path_eval(phi, double gamma, double theta):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p = np.ascontiguousarray(np.ravel(phi), dtype=np.float64)
    cdef Py_ssize_t i, m = p.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] r = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rp = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gt = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] hp = np.empty(m)
    cdef double s = sinh(gamma), c = cosh(gamma)
    for i in range(m):
        _point(p[i], gamma, theta, s, c, &r[i], &rp[i], &h[i], &gt[i], &hp[i])
    shape = np.shape(phi)
    return r.reshape(shape), rp.reshape(shape), h.reshape(shape), gt.reshape(shape), hp.reshape(shape)


def path_integrand(phi, double gamma, double theta, double scale):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p = np.ascontiguousarray(np.ravel(phi), dtype=np.float64)
    cdef Py_ssize_t i, m = p.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m)
    cdef double s = sinh(gamma), c = cosh(gamma)
    cdef double r, rp, h, gt, hp
    with nogil:
        for i in range(m):
            _point(p[i], gamma, theta, s, c, &r, &rp, &h, &gt, &hp)
            out[i] = gt * exp(-scale * h)
    return out.reshape(np.shape(phi))


def power_table(inner, int N):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a = np.ascontiguousarray(inner, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] T = np.zeros((N + 1, N + 1))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ratio = np.zeros(N + 1)
    cdef double a1 = a[1], acc, pw
    cdef int j, n, k, l
    for l in range(1, N):
        ratio[l] = a[l + 1] / a1
    with nogil:
        pw = 1.0
        for j in range(1, N + 1):
            pw *= a1
            T[j, j] = pw
            for n in range(j + 1, N + 1):
                k = n - j
                acc = 0.0
                for l in range(1, k + 1):
                    acc += (l * j - n + j + l) * ratio[l] * T[j, n - l]
                T[j, n] = acc / k
    return T
