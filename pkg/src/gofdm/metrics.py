"""PAPR and periodic ambiguity-function metrics of a sequence group set.

The periodic AF of groups ``P`` and ``Q`` at delay index ``tau`` and Doppler
``f_d`` is

    AF(tau, f_d) = sum_k e^{j2pi f_d k T_c} sum_n zQ[n,k] conj(zP[(n+tau) % N, k]) e^{j2pi f_d n T_s}

Sidelobe levels are amplitude ratios against ``AF_ref = K``, the auto-AF peak
of unit-energy symbols, reported in dB as ``20*log10(|AF| / AF_ref)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, DegenerateInputError
from .io import db_round
from .waveform import Preprocessor, SequenceGroupSet, WaveformParams, synthesize_tf, tf_to_delay_time

DB_FLOOR = -300.0


@dataclass(frozen=True)
class DopplerGrid:
    """``J`` equally spaced Doppler shifts covering ``[-f_D, f_D]``; ``J`` must be odd."""

    f_D: float
    J: int

    def __post_init__(self):
        if self.J < 1 or self.J % 2 == 0:
            raise ConfigError(f"J must be a positive odd integer, got {self.J}")
        if self.f_D < 0:
            raise ConfigError(f"f_D must be >= 0, got {self.f_D}")
        if self.J == 1 and self.f_D != 0:
            raise ConfigError("a single-point Doppler grid requires f_D = 0")

    @property
    def step(self) -> float:
        return 0.0 if self.J == 1 else 2.0 * self.f_D / (self.J - 1)

    @property
    def values(self) -> np.ndarray:
        r = np.arange(self.J)
        vals = -self.f_D + r * self.step
        vals[self.J // 2] = 0.0
        return vals

    @property
    def zero_index(self) -> int:
        return self.J // 2

    def check(self, params: WaveformParams) -> None:
        """Reject grids whose step reaches the Doppler resolution ``1/(K T_c)``."""
        resolution = 1.0 / (params.K * params.T_c)
        if self.step >= resolution:
            raise ConfigError(
                f"Doppler step {self.step:.6g} Hz is not fractional: resolution 1/(K*T_c) = {resolution:.6g} Hz"
            )

    def within(self, bound: float) -> np.ndarray:
        """Mask of grid points with ``|f_d| <= bound`` (tolerant to float round-off)."""
        tol = 1e-9 * max(1.0, self.f_D)
        return np.abs(self.values) <= bound + tol


@dataclass(frozen=True, eq=False)
class AfSurface:
    """|AF| on the (delay, Doppler) grid for the ordered pair ``(P, Q)``.

    ``mag[tau, r]`` holds ``|AF(tau, f_r)|``; ``values`` keeps the complex AF.
    """

    mag: np.ndarray
    pair: tuple[int, int]
    af_ref: float
    values: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_auto(self) -> bool:
        return self.pair[0] == self.pair[1]

    @property
    def ratio(self) -> np.ndarray:
        return self.mag / self.af_ref


@dataclass(frozen=True)
class MetricsReport:
    papr_db: float
    apsl_db: float
    cpsl_db: float | None
    b: int
    f_b: float
    w1: float
    w2: float
    apsl_b: int | None = None  # delay exclusion actually applied to APSL

    FIELDS = ("papr_db", "apsl_db", "cpsl_db", "w1", "w2", "b", "f_b")

    def to_dict(self) -> dict:
        return {
            "papr_db": db_round(self.papr_db),
            "apsl_db": db_round(self.apsl_db),
            "cpsl_db": db_round(self.cpsl_db),
            "w1": db_round(self.w1),
            "w2": db_round(self.w2),
            "b": int(self.b),
            "f_b": db_round(self.f_b),
            "apsl_b": int(self.b if self.apsl_b is None else self.apsl_b),
        }


def to_db_amplitude(ratio: float) -> float:
    """``20 log10(ratio)``, floored at -300 dB."""
    if ratio <= 0:
        return DB_FLOOR
    return max(20.0 * math.log10(ratio), DB_FLOOR)


# ---------------------------------------------------------------------------
# signals


def normalize_energy(Z) -> np.ndarray:
    """Scale every column (axis -2 samples, axis -1 symbols) to unit energy."""
    Z = np.asarray(Z)
    norms = np.sqrt(np.sum(np.abs(Z) ** 2, axis=-2, keepdims=True))
    if np.any(norms == 0):
        raise DegenerateInputError("cannot normalize an all-zero OFDM symbol")
    return Z / norms


def papr(z) -> float:
    """Peak-to-average power ratio (linear) of one delay-time column."""
    p = np.abs(np.asarray(z).reshape(-1)) ** 2
    mean = p.mean()
    if mean == 0:
        raise DegenerateInputError("PAPR of an all-zero symbol is undefined")
    return float(p.max() / mean)


def papr_db(z) -> float:
    return 10.0 * math.log10(papr(z))


def papr_per_symbol(Z) -> np.ndarray:
    """Linear PAPR of every column; ``Z`` has shape ``(..., N, K)``."""
    p = np.abs(np.asarray(Z)) ** 2
    mean = p.mean(axis=-2)
    if np.any(mean == 0):
        raise DegenerateInputError("PAPR of an all-zero symbol is undefined")
    return p.max(axis=-2) / mean


def papr_set_db(Zs) -> float:
    """Maximum PAPR over all groups and symbols, in dB."""
    return 10.0 * math.log10(float(np.max(papr_per_symbol(Zs))))


def delay_time_set(groupset, pre: Preprocessor, N: int) -> np.ndarray:
    """Delay-time signals ``(D, N, K)`` for every group of the set."""
    S = groupset.groups if isinstance(groupset, SequenceGroupSet) else np.asarray(groupset)
    return tf_to_delay_time(synthesize_tf(S, pre), N)


# ---------------------------------------------------------------------------
# ambiguity functions


def doppler_ramp(freqs, N: int, K: int, T_s: float, T_c: float) -> np.ndarray:
    """Phase ramps ``exp(j2pi f (n T_s + k T_c))`` with shape ``(J, N, K)``."""
    freqs = np.asarray(freqs, dtype=float)
    n = np.arange(N)[:, None] * T_s
    k = np.arange(K)[None, :] * T_c
    return np.exp(2j * np.pi * freqs[:, None, None] * (n + k)[None])


def af_direct(Z_P, Z_Q, tau: int, f_d: float, params: WaveformParams) -> complex:
    """Single AF value by explicit double summation (reference path)."""
    Z_P = np.ascontiguousarray(Z_P, dtype=np.complex128)
    Z_Q = np.ascontiguousarray(Z_Q, dtype=np.complex128)
    N = Z_P.shape[0]
    if not 0 <= tau < N:
        raise ConfigError(f"delay index must lie in [0, {N}), got {tau}")
    out = kernels.af_direct_grid(Z_P, Z_Q, np.array([tau], dtype=np.int64),
                                 np.array([f_d], dtype=float), params.T_s, params.T_c)
    return complex(out[0, 0])


def af_direct_surface(Z_P, Z_Q, grid: DopplerGrid, params: WaveformParams) -> np.ndarray:
    """Complex AF on the full ``(N, J)`` grid by explicit summation."""
    Z_P = np.ascontiguousarray(Z_P, dtype=np.complex128)
    Z_Q = np.ascontiguousarray(Z_Q, dtype=np.complex128)
    N = Z_P.shape[0]
    return kernels.af_direct_grid(Z_P, Z_Q, np.arange(N, dtype=np.int64),
                                  np.ascontiguousarray(grid.values), params.T_s, params.T_c)


def af_surface_fft(Z_P, Z_Q, grid: DopplerGrid, params: WaveformParams,
                   pair: tuple[int, int] = (0, 1), af_ref: float | None = None) -> AfSurface:
    """AF of one ordered pair over the whole grid using N-point FFTs."""
    Z_P = np.asarray(Z_P, dtype=np.complex128)
    Z_Q = np.asarray(Z_Q, dtype=np.complex128)
    if Z_P.shape != Z_Q.shape:
        raise ConfigError(f"signal shapes differ: {Z_P.shape} vs {Z_Q.shape}")
    N, K = Z_P.shape
    ramp = doppler_ramp(grid.values, N, K, params.T_s, params.T_c)
    Ph = np.fft.fft(Z_P, axis=0)
    Yh = np.fft.fft(Z_Q[None] * ramp, axis=1)
    G = np.einsum("mk,rmk->rm", Ph.conj(), Yh)
    af = np.fft.fft(G, axis=-1) / N
    values = af.T.copy()
    return AfSurface(np.abs(values), tuple(pair), float(K if af_ref is None else af_ref), values)


@dataclass
class AfSpectra:
    """Per-group transforms shared by every pair of an AF sweep.

    ``Zh[d]`` is the DFT of group ``d``; ``Yh[d, r]`` the DFT of group ``d``
    after the Doppler ramp of grid point ``r``.
    """

    Z: np.ndarray
    Zh: np.ndarray
    Yh: np.ndarray
    ramp: np.ndarray

    @classmethod
    def build(cls, Zs, grid: DopplerGrid, params: WaveformParams) -> "AfSpectra":
        Zs = np.asarray(Zs, dtype=np.complex128)
        _, N, K = Zs.shape
        ramp = doppler_ramp(grid.values, N, K, params.T_s, params.T_c)
        Zh = np.fft.fft(Zs, axis=1)
        Yh = np.fft.fft(Zs[:, None] * ramp[None], axis=2)
        return cls(Zs, Zh, Yh, ramp)

    @property
    def D(self) -> int:
        return self.Z.shape[0]

    @property
    def N(self) -> int:
        return self.Z.shape[1]

    def row_block(self, P: int) -> np.ndarray:
        """AF of pairs ``(P, Q)`` for every ``Q``, shape ``(D, J, N)`` indexed ``[Q, r, tau]``."""
        G = np.einsum("mk,qrmk->qrm", self.Zh[P].conj(), self.Yh)
        return np.fft.fft(G, axis=-1) / self.N


@dataclass(frozen=True)
class Peaks:
    """Largest auto-AF sidelobe and cross-AF value with their ``(P, Q, r, tau)`` locations."""

    auto_mag: float
    auto_at: tuple[int, int, int, int] | None
    cross_mag: float
    cross_at: tuple[int, int, int, int] | None


def scan_peaks(spectra: AfSpectra, b: int, auto_doppler: np.ndarray) -> Peaks:
    """Scan all ordered pairs for the sidelobe peaks; ties keep the lowest flat index."""
    N = spectra.N
    if 2 * b + 1 >= N:
        raise ConfigError(f"mainlobe exclusion b={b} leaves no delay outside [0,b] U [N-b,N-1] for N={N}")
    mask = np.ascontiguousarray(auto_doppler, dtype=np.uint8)
    if not mask.any():
        raise ConfigError("APSL Doppler range contains no grid point")
    best_a, at_a = -1.0, None
    best_c, at_c = -1.0, None
    for P in range(spectra.D):
        block = np.ascontiguousarray(spectra.row_block(P))
        a_sq, ar, atau, c_sq, cq, cr, ctau = kernels.peak_search(block, P, int(b), mask)
        if ar >= 0 and a_sq > best_a:
            best_a, at_a = a_sq, (P, P, int(ar), int(atau))
        if cq >= 0 and c_sq > best_c:
            best_c, at_c = c_sq, (P, int(cq), int(cr), int(ctau))
    return Peaks(math.sqrt(max(best_a, 0.0)), at_a, math.sqrt(max(best_c, 0.0)) if at_c else 0.0, at_c)


def all_surfaces(Zs, grid: DopplerGrid, params: WaveformParams) -> dict[tuple[int, int], AfSurface]:
    """Every ordered-pair surface of a set, keyed by ``(P, Q)``."""
    spectra = AfSpectra.build(Zs, grid, params)
    K = spectra.Z.shape[2]
    out = {}
    for P in range(spectra.D):
        block = spectra.row_block(P)
        for Q in range(spectra.D):
            values = block[Q].T.copy()
            out[(P, Q)] = AfSurface(np.abs(values), (P, Q), float(K), values)
    return out


# ---------------------------------------------------------------------------
# mainlobe and sidelobe levels


def _first_local_min(v: np.ndarray, start: int, stop: int) -> int | None:
    for i in range(start, stop):
        if v[i] <= v[i - 1] and v[i] <= v[i + 1]:
            return i
    return None


def mainlobe(surface: AfSurface, grid: DopplerGrid, params: WaveformParams) -> tuple[int, float, float, float]:
    """Mainlobe extent ``(b, f_b, W1, W2)`` of an auto-AF surface.

    ``b`` is the first delay in ``(0, N//2)`` where ``|AF(tau, 0)|`` is a
    (non-strict) local minimum, falling back to ``N//2 - 1``. ``f_b`` is the
    first positive-Doppler local minimum along ``tau = 0``, clipped to
    ``f_D`` when there is none inside the grid.
    """
    if not surface.is_auto:
        raise ConfigError("mainlobe is defined for auto-AF surfaces only")
    N = surface.mag.shape[0]
    if N < 4:
        raise ConfigError(f"mainlobe needs N >= 4, got {N}")
    r0 = grid.zero_index
    delay_cut = surface.mag[:, r0]
    b = _first_local_min(delay_cut, 1, N // 2)
    if b is None:
        b = N // 2 - 1
    dop_cut = surface.mag[0, :]
    r = _first_local_min(dop_cut, r0 + 1, grid.J - 1)
    f_b = float(grid.values[r]) if r is not None else float(grid.f_D)
    return int(b), f_b, b * params.M / N, f_b * params.K * params.T_c


def apsl(surfaces, b: int, f_b: float, grid: DopplerGrid, full_doppler: bool = False) -> float:
    """Auto-AF peak sidelobe level in dB over every auto surface."""
    worst = 0.0
    dop = np.ones(grid.J, dtype=bool) if full_doppler else grid.within(f_b)
    if not dop.any():
        raise ConfigError("APSL Doppler range contains no grid point")
    for s in surfaces:
        if not s.is_auto:
            continue
        N = s.mag.shape[0]
        if b < 1 or 2 * b + 1 >= N:
            raise ConfigError(f"mainlobe exclusion b={b} is invalid for N={N}")
        region = s.ratio[b + 1:N - b][:, dop]
        worst = max(worst, float(region.max()))
    return to_db_amplitude(worst)


def cpsl(surfaces) -> float | None:
    """Cross-AF peak level in dB; ``None`` when the set has no cross pairs (D < 2)."""
    cross = [s for s in surfaces if not s.is_auto]
    if not cross:
        return None
    return to_db_amplitude(max(float(s.ratio.max()) for s in cross))


# ---------------------------------------------------------------------------
# whole-set evaluation


def default_b(params: WaveformParams) -> int:
    """Mainlobe exclusion matching a unit normalized width: ``round(N / M)``."""
    return max(1, int(round(params.N / params.M)))


def set_mainlobe(spectra: AfSpectra, grid: DopplerGrid, params: WaveformParams) -> tuple[int, float, float, float]:
    """Mainlobe of the group-averaged auto-AF magnitude.

    Averaging over groups keeps the measurement stable for random-like
    sequences whose individual spectra fluctuate.
    """
    K = spectra.Z.shape[2]
    avg = np.mean([np.abs(spectra.row_block(P)[P]).T for P in range(spectra.D)], axis=0)
    return mainlobe(AfSurface(avg, (0, 0), float(K)), grid, params)


def evaluate(groupset, pre: Preprocessor, params: WaveformParams, grid: DopplerGrid,
             b: int | None = None, f_b: float | None = None, full_doppler: bool = False,
             return_surfaces: bool = False):
    """Metrics report for a set under one waveform.

    The reported mainlobe ``(b, f_b, w1, w2)`` is measured on the
    group-averaged auto-AF. APSL excludes delays up to ``b`` and Doppler
    beyond ``f_b``, which default to that measurement.
    """
    grid.check(params)
    Zs = normalize_energy(delay_time_set(groupset, pre, params.N))
    D, N, K = Zs.shape
    spectra = AfSpectra.build(Zs, grid, params)
    mb, mf, w1, w2 = set_mainlobe(spectra, grid, params)
    b_used = mb if b is None else int(b)
    f_used = mf if f_b is None else float(f_b)
    dop = np.ones(grid.J, dtype=bool) if full_doppler else grid.within(f_used)
    peaks = scan_peaks(spectra, b_used, dop)
    report = MetricsReport(
        papr_db=papr_set_db(Zs),
        apsl_db=to_db_amplitude(peaks.auto_mag / K),
        cpsl_db=to_db_amplitude(peaks.cross_mag / K) if D > 1 else None,
        b=mb, f_b=mf, w1=w1, w2=w2, apsl_b=b_used,
    )
    if return_surfaces:
        return report, all_surfaces(Zs, grid, params)
    return report
