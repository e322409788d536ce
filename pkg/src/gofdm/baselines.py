"""5G NR comparison schemes: Zadoff-Chu, Gold/PRBS with pi/2-BPSK or QPSK, RRC FDSS."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError
from .waveform import (
    CP_OFDM,
    DFT_S_OFDM,
    Preprocessor,
    SequenceGroupSet,
    WaveformParams,
    build_preprocessor,
)

SCHEMES = ("cp-ofdm-gold", "cp-ofdm-zc", "dft-s-ofdm-gold", "dft-s-ofdm-gold-fdss")
DEFAULT_ROLL_OFF = 0.4


@dataclass(frozen=True)
class PrbsConfig:
    c_init: int
    length: int
    N_c: int = 1600

    def __post_init__(self):
        if not 0 <= self.c_init < 2**31:
            raise ConfigError(f"c_init must be a 31-bit value, got {self.c_init}")
        if self.length < 0:
            raise ConfigError(f"length must be >= 0, got {self.length}")


@dataclass(frozen=True)
class FdssConfig:
    roll_off: float
    M: int

    def __post_init__(self):
        if not 0 <= self.roll_off <= 1:
            raise ConfigError(f"roll_off must lie in [0, 1], got {self.roll_off}")
        if self.M < 2:
            raise ConfigError(f"FDSS length must be >= 2, got {self.M}")


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, math.isqrt(n) + 1))


def largest_prime_le(n: int) -> int:
    for p in range(n, 1, -1):
        if is_prime(p):
            return p
    raise ConfigError(f"no prime <= {n}")


def zc_sequence(N_zc: int, u: int) -> np.ndarray:
    """Zadoff-Chu sequence ``exp(-j*pi*u*n*(n+1)/N_zc)`` of odd length ``N_zc``."""
    if N_zc < 1 or N_zc % 2 == 0:
        raise ConfigError(f"ZC length must be odd, got {N_zc}")
    if not 0 < u < N_zc or math.gcd(u, N_zc) != 1:
        raise ConfigError(f"ZC root {u} is not coprime with length {N_zc}")
    n = np.arange(N_zc)
    # n(n+1) is even, so reduce modulo 2*N_zc before scaling to keep phases exact
    return np.exp(-1j * np.pi * ((u * n * (n + 1)) % (2 * N_zc)) / N_zc)


def prbs_gold(cfg: PrbsConfig) -> np.ndarray:
    """Length-31 Gold sequence bits as used for NR pseudo-random sequences."""
    return np.asarray(kernels.gold_bits(cfg.c_init, cfg.length, cfg.N_c), dtype=np.uint8)


def map_pi2_bpsk(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=float)
    i = np.arange(bits.size)
    amp = (1 - 2 * bits) * (1 + 1j) / np.sqrt(2)
    return np.exp(1j * np.pi / 2 * (i % 2)) * amp


def map_qpsk(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=float)
    if bits.size % 2:
        raise ConfigError(f"QPSK needs an even number of bits, got {bits.size}")
    return ((1 - 2 * bits[0::2]) + 1j * (1 - 2 * bits[1::2])) / np.sqrt(2)


def rrc_fdss(cfg: FdssConfig) -> np.ndarray:
    """Root-raised-cosine spectral shaping across ``M`` subcarriers.

    The occupied band carries the whole raised-cosine spectrum including the
    roll-off region: subcarrier ``m`` sits at normalized frequency
    ``f = (m + 1/2 - M/2) * (1 + roll_off) / M`` and gets the square root of
    the raised-cosine response at ``f``, rescaled so the peak is 1.
    """
    M, beta = cfg.M, cfg.roll_off
    f = np.abs((np.arange(M) + 0.5 - M / 2) * (1 + beta) / M)
    H = np.ones(M)
    if beta > 0:
        lo, hi = (1 - beta) / 2, (1 + beta) / 2
        edge = (f > lo) & (f <= hi)
        H[edge] = 0.5 * (1 + np.cos(np.pi / beta * (f[edge] - lo)))
        H[f > hi] = 0.0
    c = np.sqrt(H)
    return (c / c.max()).astype(np.complex128)


def zc_roots(N_zc: int, D: int, spacing: str = "spread") -> list[int]:
    """``D`` distinct roots coprime with ``N_zc``.

    ``"spread"`` picks evenly spaced entries of the ascending coprime list,
    ``"ascending"`` the first ``D`` of them.
    """
    coprime = [u for u in range(1, N_zc) if math.gcd(u, N_zc) == 1]
    if len(coprime) < D:
        raise ConfigError(f"only {len(coprime)} ZC roots exist for length {N_zc}, need D={D}")
    if spacing == "ascending":
        return coprime[:D]
    if spacing != "spread":
        raise ConfigError(f"unknown root spacing {spacing!r}")
    return [coprime[(d * len(coprime)) // D] for d in range(D)]


def _zc_groups(params: WaveformParams, extend: bool, spacing: str, column_shift: bool) -> np.ndarray:
    L_seq, L_grp, D = params.L_seq, params.L_grp, params.D
    N_zc = largest_prime_le(L_seq)
    roots = zc_roots(N_zc, D, spacing)
    if not extend and N_zc != L_seq:
        raise ConfigError(f"truncation mode needs a prime sequence length, got {L_seq}")
    n = np.arange(L_seq)
    groups = np.empty((D, L_seq, L_grp), dtype=np.complex128)
    for d, u in enumerate(roots):
        base = zc_sequence(N_zc, u)
        for j in range(L_grp):
            shift = (j * N_zc) // L_grp if column_shift else 0
            groups[d, :, j] = base[(n + shift) % N_zc]
    return groups


def _gold_groups(params: WaveformParams, seed: int, mapper: str) -> np.ndarray:
    L_seq, L_grp, D = params.L_seq, params.L_grp, params.D
    bits_per_symbol = 2 if mapper == "qpsk" else 1
    groups = np.empty((D, L_seq, L_grp), dtype=np.complex128)
    for d in range(D):
        bits = prbs_gold(PrbsConfig((seed + d) % 2**31, bits_per_symbol * L_seq * L_grp))
        for j in range(L_grp):
            chunk = bits[j * bits_per_symbol * L_seq:(j + 1) * bits_per_symbol * L_seq]
            groups[d, :, j] = map_qpsk(chunk) if mapper == "qpsk" else map_pi2_bpsk(chunk)
    return groups


def baseline_scheme(name: str, params: WaveformParams, seed: int = 0,
                    roll_off: float = DEFAULT_ROLL_OFF, cp_gold_mapping: str = "qpsk",
                    zc_extend: bool = True, zc_spacing: str = "spread",
                    zc_column_shift: bool = False) -> tuple[SequenceGroupSet, Preprocessor]:
    """Sequence set and waveform of one 5G comparison scheme.

    ZC groups use the largest prime length not above ``L_seq``, cyclically
    extended, one root per group; by default every symbol of a group repeats
    the same sequence (``zc_column_shift=True`` rotates column ``j`` by
    ``j*N_zc // L_grp``). Gold groups draw bits from the PRBS seeded with
    ``seed + d``. Baselines always use the orthogonal waveforms, so ``alpha``
    and ``beta`` of ``params`` are overridden with 1.
    """
    key = name.strip().lower()
    if key not in SCHEMES:
        raise ConfigError(f"unknown baseline scheme {name!r}; expected one of {SCHEMES}")
    params = params.replace(alpha=1.0, beta=1.0)
    if params.L_seq < 3:
        raise ConfigError(f"baseline sequences need length >= 3, got {params.L_seq}")

    if key == "cp-ofdm-zc":
        groups = _zc_groups(params, zc_extend, zc_spacing, zc_column_shift)
        pre = build_preprocessor(CP_OFDM, params)
    elif key == "cp-ofdm-gold":
        if cp_gold_mapping not in ("qpsk", "pi2-bpsk"):
            raise ConfigError(f"unknown mapping {cp_gold_mapping!r}")
        groups = _gold_groups(params, seed, cp_gold_mapping)
        pre = build_preprocessor(CP_OFDM, params)
    else:
        groups = _gold_groups(params, seed, "pi2-bpsk")
        c = rrc_fdss(FdssConfig(roll_off, params.M)) if key.endswith("fdss") else None
        pre = build_preprocessor(DFT_S_OFDM, params, c=c)
    return SequenceGroupSet(groups, mode="unimodular-continuous"), pre
