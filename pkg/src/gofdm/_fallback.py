"""Pure-Python implementations of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def af_direct_grid(zp, zq, taus, freqs, ts, tc):
    zp = np.asarray(zp, dtype=np.complex128)
    zq = np.asarray(zq, dtype=np.complex128)
    n_samp, n_sym = zp.shape
    n = np.arange(n_samp)
    out = np.empty((len(taus), len(freqs)), dtype=np.complex128)
    for i, tau in enumerate(taus):
        shifted = zp[(n + int(tau)) % n_samp, :].conj()
        prod = zq * shifted
        for r, f in enumerate(freqs):
            inner = np.exp(2j * np.pi * f * n * ts) @ prod
            out[i, r] = np.sum(inner * np.exp(2j * np.pi * f * np.arange(n_sym) * tc))
    return out


def gold_bits(c_init, length, n_c=1600):
    total = length + n_c + 31
    x1 = [0] * total
    x2 = [0] * total
    x1[0] = 1
    for i in range(31):
        x2[i] = (int(c_init) >> i) & 1
    for n in range(total - 31):
        x1[n + 31] = (x1[n + 3] + x1[n]) & 1
        x2[n + 31] = (x2[n + 3] + x2[n + 2] + x2[n + 1] + x2[n]) & 1
    return np.array([(x1[n + n_c] + x2[n + n_c]) & 1 for n in range(length)], dtype=np.uint8)


def peak_search(block, p, b, auto_doppler):
    block = np.asarray(block)
    n_q, n_r, n_tau = block.shape
    sq = block.real**2 + block.imag**2

    auto_best, ar, at = -1.0, -1, -1
    rows = np.flatnonzero(np.asarray(auto_doppler, dtype=bool))
    if rows.size and n_tau - b > b + 1:
        region = sq[p][rows, b + 1:n_tau - b]
        idx = int(np.argmax(region))
        i, j = np.unravel_index(idx, region.shape)
        auto_best, ar, at = float(region[i, j]), int(rows[i]), int(j + b + 1)

    cross_best, cq, cr, ct = -1.0, -1, -1, -1
    if n_q > 1:
        masked = sq.copy()
        masked[p] = -np.inf
        idx = int(np.argmax(masked))
        q, r, t = np.unravel_index(idx, masked.shape)
        cross_best, cq, cr, ct = float(masked[q, r, t]), int(q), int(r), int(t)
    return auto_best, ar, at, cross_best, cq, cr, ct
