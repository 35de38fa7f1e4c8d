# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the capacity solver inner loop.

Mirrors the contract of `dmcprune._kernels_py`; see that module for the
semantics of BIG and the state arrays.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()

BIG = 1e300

cdef double _BIG = 1e300


cdef (double, double) _eval(const double[:, ::1] w, const double[::1] neg_h,
                            const unsigned char[::1] col_support,
                            const double[::1] p, double[::1] q, double[::1] d) noexcept nogil:
    cdef Py_ssize_t m = w.shape[0]
    cdef Py_ssize_t n = w.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc, lq, lower, upper
    cdef bint any_starved = False

    for j in range(n):
        acc = 0.0
        for i in range(m):
            acc += p[i] * w[i, j]
        q[j] = acc
        if acc <= 0.0 and col_support[j]:
            any_starved = True

    for i in range(m):
        acc = neg_h[i]
        for j in range(n):
            if q[j] > 0.0:
                acc -= w[i, j] * log(q[j])
        d[i] = acc
    if any_starved:
        for j in range(n):
            if q[j] <= 0.0 and col_support[j]:
                for i in range(m):
                    if w[i, j] > 0.0:
                        d[i] = _BIG

    lower = 0.0
    upper = d[0]
    for i in range(m):
        lower += p[i] * d[i]
        if d[i] > upper:
            upper = d[i]
    return lower, upper


def eval_state(const double[:, ::1] w, const double[::1] neg_h,
               const unsigned char[::1] col_support,
               const double[::1] p, double[::1] q, double[::1] d):
    """Evaluate output law q = p @ w and per-row divergences d; return (lower, upper)."""
    cdef (double, double) lu
    with nogil:
        lu = _eval(w, neg_h, col_support, p, q, d)
    return lu[0], lu[1]


def run_burst(const double[:, ::1] w, const double[::1] neg_h,
              const unsigned char[::1] col_support,
              double[::1] p, double[::1] q, double[::1] d, double[::1] delta,
              double lower, double upper, long max_steps, double tol):
    """Run up to max_steps multiplicative updates; stop early once the bracket closes.

    Returns (steps_done, lower, upper, dn_last, dn_prev, converged).
    """
    cdef Py_ssize_t m = w.shape[0]
    cdef Py_ssize_t i
    cdef long steps = 0
    cdef double dn_last = 0.0, dn_prev = 0.0
    cdef double s, pn_i, sq
    cdef bint converged = upper - lower <= tol
    cdef (double, double) lu
    cdef double[::1] pn = np.empty(m, dtype=np.float64)

    with nogil:
        while not converged and steps < max_steps:
            s = 0.0
            for i in range(m):
                pn_i = p[i] * exp(d[i] - upper)
                pn[i] = pn_i
                s += pn_i
            if s <= 0.0:
                s = 0.0
                for i in range(m):
                    pn[i] = 1.0 if d[i] >= upper else 0.0
                    s += pn[i]
            sq = 0.0
            for i in range(m):
                pn_i = pn[i] / s
                delta[i] = pn_i - p[i]
                sq += delta[i] * delta[i]
                p[i] = pn_i
            dn_prev = dn_last
            dn_last = sqrt(sq)
            lu = _eval(w, neg_h, col_support, p, q, d)
            lower = lu[0]
            upper = lu[1]
            steps += 1
            converged = upper - lower <= tol
    return steps, lower, upper, dn_last, dn_prev, converged
