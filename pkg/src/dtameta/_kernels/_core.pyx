# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of the adaptive Gauss-Hermite likelihood kernel.

Logistic link only; the dispatcher falls back to the NumPy
implementation for the probit link. Semantics match
dtameta._kernels._fallback.loglik_terms exactly.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, log1p, sqrt, fabs

cnp.import_array()

BACKEND = "cython"


cdef inline double _log_sigmoid(double x) nogil:
    if x > 0.0:
        return -log1p(exp(-x))
    return x - log1p(exp(x))


cdef inline double _sigmoid(double x) nogil:
    if x > 0.0:
        return 1.0 / (1.0 + exp(-x))
    cdef double e = exp(x)
    return e / (1.0 + e)


def loglik_terms_logistic(
    double[::1] n11,
    double[::1] n01,
    double[::1] n10,
    double[::1] n00,
    double theta,
    double alpha,
    double beta,
    double sig_theta,
    double sig_alpha,
    double[::1] z,
    double[::1] w,
):
    cdef Py_ssize_t n_studies = n11.shape[0]
    cdef Py_ssize_t k = z.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n_studies)
    cdef double[::1] out_v = out

    cdef double e1 = exp(-0.5 * beta)
    cdef double e0 = exp(0.5 * beta)
    cdef double ivt = 1.0 / (sig_theta * sig_theta)
    cdef double iva = 1.0 / (sig_alpha * sig_alpha)
    cdef double s2 = sqrt(2.0)
    cdef double log_norm = -log(2.0 * np.pi * sig_theta * sig_alpha)

    # precompute log weights with the e^{z^2} factor folded in
    cdef cnp.ndarray[cnp.float64_t, ndim=1] logw_arr = np.log(np.asarray(w)) + np.asarray(z) ** 2
    cdef double[::1] logw = logw_arr

    cdef Py_ssize_t s, it, i, j
    cdef double c11, c01, c10, c00, nd, nn
    cdef double t, a, eta1, eta0, g1, g0
    cdef double d1_1, d1_0, d2_1, d2_0
    cdef double ht, ha, htt, haa, hta, det, dt, da
    cdef double a11, a12, a22, q11, q12, q22, l11, l21, l22
    cdef double tg, ag, h, m, acc, val

    for s in range(n_studies):
        c11 = n11[s]; c01 = n01[s]; c10 = n10[s]; c00 = n00[s]
        nd = c11 + c01
        nn = c10 + c00
        t = 0.0
        a = 0.0
        for it in range(100):
            eta1 = (theta + t + 0.5 * (alpha + a)) * e1
            eta0 = (theta + t - 0.5 * (alpha + a)) * e0
            g1 = _sigmoid(eta1)
            g0 = _sigmoid(eta0)
            d1_1 = c11 - nd * g1
            d1_0 = c10 - nn * g0
            d2_1 = -nd * g1 * (1.0 - g1)
            d2_0 = -nn * g0 * (1.0 - g0)
            ht = d1_1 * e1 + d1_0 * e0 - t * ivt
            ha = 0.5 * (d1_1 * e1 - d1_0 * e0) - a * iva
            htt = d2_1 * e1 * e1 + d2_0 * e0 * e0 - ivt
            haa = 0.25 * (d2_1 * e1 * e1 + d2_0 * e0 * e0) - iva
            hta = 0.5 * (d2_1 * e1 * e1 - d2_0 * e0 * e0)
            det = htt * haa - hta * hta
            dt = (haa * ht - hta * ha) / det
            da = (htt * ha - hta * ht) / det
            t -= dt
            a -= da
            if fabs(dt) < 1e-11 and fabs(da) < 1e-11:
                break

        eta1 = (theta + t + 0.5 * (alpha + a)) * e1
        eta0 = (theta + t - 0.5 * (alpha + a)) * e0
        g1 = _sigmoid(eta1)
        g0 = _sigmoid(eta0)
        d2_1 = -nd * g1 * (1.0 - g1)
        d2_0 = -nn * g0 * (1.0 - g0)
        a11 = -(d2_1 * e1 * e1 + d2_0 * e0 * e0) + ivt
        a22 = -0.25 * (d2_1 * e1 * e1 + d2_0 * e0 * e0) + iva
        a12 = -0.5 * (d2_1 * e1 * e1 - d2_0 * e0 * e0)
        det = a11 * a22 - a12 * a12
        q11 = a22 / det
        q12 = -a12 / det
        q22 = a11 / det
        l11 = sqrt(q11)
        l21 = q12 / l11
        l22 = sqrt(q22 - l21 * l21)

        # first pass: maximum of the log summands for a stable log-sum-exp
        m = -1e308
        for i in range(k):
            for j in range(k):
                tg = t + s2 * l11 * z[i]
                ag = a + s2 * (l21 * z[i] + l22 * z[j])
                eta1 = (theta + tg + 0.5 * (alpha + ag)) * e1
                eta0 = (theta + tg - 0.5 * (alpha + ag)) * e0
                h = (
                    c11 * _log_sigmoid(eta1)
                    + c01 * _log_sigmoid(-eta1)
                    + c10 * _log_sigmoid(eta0)
                    + c00 * _log_sigmoid(-eta0)
                    - 0.5 * tg * tg * ivt
                    - 0.5 * ag * ag * iva
                ) + logw[i] + logw[j]
                if h > m:
                    m = h
        acc = 0.0
        for i in range(k):
            for j in range(k):
                tg = t + s2 * l11 * z[i]
                ag = a + s2 * (l21 * z[i] + l22 * z[j])
                eta1 = (theta + tg + 0.5 * (alpha + ag)) * e1
                eta0 = (theta + tg - 0.5 * (alpha + ag)) * e0
                h = (
                    c11 * _log_sigmoid(eta1)
                    + c01 * _log_sigmoid(-eta1)
                    + c10 * _log_sigmoid(eta0)
                    + c00 * _log_sigmoid(-eta0)
                    - 0.5 * tg * tg * ivt
                    - 0.5 * ag * ag * iva
                ) + logw[i] + logw[j]
                acc += exp(h - m)
        val = m + log(acc) + log(2.0 * l11 * l22) + log_norm
        out_v[s] = val

    return out
