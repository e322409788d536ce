# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Each function here has a pure-Python twin in ``_fallback.py`` with the same
signature and semantics; ``gofdm.kernels`` picks one at import time.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, M_PI

cnp.import_array()


def af_direct_grid(const double complex[:, ::1] zp,
                   const double complex[:, ::1] zq,
                   const long[::1] taus,
                   const double[::1] freqs,
                   double ts, double tc):
    """Periodic ambiguity function by explicit summation.

    ``out[i, r] = sum_k e^{j2pi f_r k tc} sum_n zq[n,k] conj(zp[(n+tau_i) % N, k]) e^{j2pi f_r n ts}``
    """
    cdef Py_ssize_t n_samp = zp.shape[0]
    cdef Py_ssize_t n_sym = zp.shape[1]
    cdef Py_ssize_t n_tau = taus.shape[0]
    cdef Py_ssize_t n_f = freqs.shape[0]
    cdef Py_ssize_t i, r, k, n, m, tau
    cdef double ph
    cdef double complex acc, inner
    out = np.empty((n_tau, n_f), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    # phase tables so the inner loop is pure multiply-accumulate
    rot_n_arr = np.empty((n_f, n_samp), dtype=np.complex128)
    rot_k_arr = np.empty((n_f, n_sym), dtype=np.complex128)
    cdef double complex[:, ::1] rot_n = rot_n_arr
    cdef double complex[:, ::1] rot_k = rot_k_arr
    for r in range(n_f):
        for n in range(n_samp):
            ph = 2.0 * M_PI * freqs[r] * n * ts
            rot_n[r, n] = cos(ph) + 1j * sin(ph)
        for k in range(n_sym):
            ph = 2.0 * M_PI * freqs[r] * k * tc
            rot_k[r, k] = cos(ph) + 1j * sin(ph)

    for i in range(n_tau):
        tau = taus[i] % n_samp
        if tau < 0:
            tau += n_samp
        for r in range(n_f):
            acc = 0
            for k in range(n_sym):
                inner = 0
                for n in range(n_samp):
                    m = n + tau
                    if m >= n_samp:
                        m -= n_samp
                    inner = inner + zq[n, k] * zp[m, k].conjugate() * rot_n[r, n]
                acc = acc + inner * rot_k[r, k]
            o[i, r] = acc
    return out


def gold_bits(unsigned long long c_init, Py_ssize_t length, Py_ssize_t n_c=1600):
    """Length-31 Gold sequence bits c(0..length-1)."""
    cdef Py_ssize_t total = length + n_c + 31
    cdef cnp.uint8_t[::1] x1 = np.zeros(total, dtype=np.uint8)
    cdef cnp.uint8_t[::1] x2 = np.zeros(total, dtype=np.uint8)
    cdef Py_ssize_t i, n
    out = np.empty(length, dtype=np.uint8)
    cdef cnp.uint8_t[::1] o = out

    x1[0] = 1
    for i in range(31):
        x2[i] = (c_init >> i) & 1
    for n in range(total - 31):
        x1[n + 31] = (x1[n + 3] + x1[n]) & 1
        x2[n + 31] = (x2[n + 3] + x2[n + 2] + x2[n + 1] + x2[n]) & 1
    for n in range(length):
        o[n] = (x1[n + n_c] + x2[n + n_c]) & 1
    return out


def peak_search(const double complex[:, :, ::1] block,
                Py_ssize_t p,
                Py_ssize_t b,
                const cnp.uint8_t[::1] auto_doppler):
    """Fused |AF|^2 peak search over one row block ``block[q, r, tau]`` of pair (p, q).

    Returns ``(auto_sq, auto_r, auto_tau, cross_sq, cross_q, cross_r, cross_tau)``.
    The auto search skips delays in ``[0, b] U [N-b, N-1]`` and Doppler bins where
    ``auto_doppler`` is 0. Ties keep the lowest flat index. Missing peaks are -1.
    """
    cdef Py_ssize_t n_q = block.shape[0]
    cdef Py_ssize_t n_r = block.shape[1]
    cdef Py_ssize_t n_tau = block.shape[2]
    cdef Py_ssize_t q, r, t
    cdef double v, re, im
    cdef double auto_best = -1.0, cross_best = -1.0
    cdef Py_ssize_t ar = -1, at = -1, cq = -1, cr = -1, ct = -1

    for q in range(n_q):
        for r in range(n_r):
            if q == p:
                if not auto_doppler[r]:
                    continue
                for t in range(b + 1, n_tau - b):
                    re = block[q, r, t].real
                    im = block[q, r, t].imag
                    v = re * re + im * im
                    if v > auto_best:
                        auto_best = v
                        ar = r
                        at = t
            else:
                for t in range(n_tau):
                    re = block[q, r, t].real
                    im = block[q, r, t].imag
                    v = re * re + im * im
                    if v > cross_best:
                        cross_best = v
                        cq = q
                        cr = r
                        ct = t
    return auto_best, ar, at, cross_best, cq, cr, ct
