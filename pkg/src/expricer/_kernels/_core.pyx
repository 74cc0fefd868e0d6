# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: binomial rollback, square-root Euler stepping,
and the barrier-crossing path scan.

Mirrors numpy_backend.py operation for operation; compiled with
-ffp-contract=off so the per-path arithmetic matches the numpy results.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log1p, sqrt, INFINITY

cnp.import_array()

BACKEND_NAME = "compiled"


def crr_backward(values, double prob, double disc, int n_levels):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v = np.array(values, dtype=np.float64)
    cdef double q = 1.0 - prob
    cdef Py_ssize_t m = v.shape[0]
    cdef Py_ssize_t i, lev
    for lev in range(n_levels):
        for i in range(m - 1):
            v[i] = disc * (prob * v[i + 1] + q * v[i])
        m -= 1
    return v[:m].copy()


def cir_step_chunk(cnp.ndarray[cnp.float64_t, ndim=1] r,
                   cnp.ndarray[cnp.float64_t, ndim=1] integral,
                   cnp.ndarray[cnp.float64_t, ndim=2] z,
                   long step0, long h_step, double dt,
                   double alpha, double m, double alpha_star, double m_star,
                   double sigma):
    cdef Py_ssize_t n_steps = z.shape[0]
    cdef Py_ssize_t n_paths = z.shape[1]
    cdef double sq_dt = sqrt(dt)
    cdef Py_ssize_t k, i
    cdef long step
    cdef double rp, drift, r_next, rp_next
    for k in range(n_steps):
        step = step0 + k
        for i in range(n_paths):
            rp = r[i] if r[i] > 0.0 else 0.0
            if step >= h_step:
                drift = alpha_star * (m_star - rp)
            else:
                drift = alpha * (m - rp)
            r_next = r[i] + drift * dt + sigma * sqrt(rp) * (sq_dt * z[k, i])
            if step >= h_step:
                rp_next = r_next if r_next > 0.0 else 0.0
                integral[i] += 0.5 * (rp + rp_next) * dt
            r[i] = r_next
    return r, integral


def cdg_step_chunk(cnp.ndarray[cnp.float64_t, ndim=1] l,
                   cnp.ndarray[cnp.float64_t, ndim=1] r,
                   cnp.ndarray[cnp.float64_t, ndim=1] log_survival,
                   cnp.ndarray[cnp.float64_t, ndim=2] z1,
                   cnp.ndarray[cnp.float64_t, ndim=2] z2,
                   cnp.ndarray[cnp.float64_t, ndim=1] c_l,
                   cnp.ndarray[cnp.float64_t, ndim=1] c_r,
                   long step0, double dt,
                   double lam, double one_lam_phi, double alpha_r,
                   double sigma_r, double sigma, double rho, double barrier):
    cdef Py_ssize_t n_steps = z1.shape[0]
    cdef Py_ssize_t n_paths = z1.shape[1]
    cdef double sq_dt = sqrt(dt)
    cdef double rho_c = sqrt(1.0 - rho * rho)
    cdef double inv_var = 2.0 / (sigma * sigma * dt)
    cdef Py_ssize_t k, i
    cdef long step
    cdef double l_next, r_next, d0, d1, p_bridge
    for k in range(n_steps):
        step = step0 + k
        for i in range(n_paths):
            l_next = (l[i] + (c_l[step] - one_lam_phi * r[i] - lam * l[i]) * dt
                      + sigma * (rho * (sq_dt * z1[k, i]) + rho_c * (sq_dt * z2[k, i])))
            r_next = r[i] + (c_r[step] - alpha_r * r[i]) * dt + sigma_r * (sq_dt * z1[k, i])
            d0 = barrier - l[i]
            d1 = barrier - l_next
            if d0 <= 0.0 or d1 <= 0.0:
                log_survival[i] = -INFINITY
            elif log_survival[i] > -INFINITY:
                p_bridge = exp(-inv_var * d0 * d1)
                log_survival[i] += log1p(-p_bridge)
            l[i] = l_next
            r[i] = r_next
    return l, r, log_survival
