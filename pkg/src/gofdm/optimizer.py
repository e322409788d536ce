"""Joint optimization of sequences and spectral shaping by gradient descent.

The trainable vector ``W`` is laid out as

    [FDSS (M, optional)] [amplitudes (D*L_seq*L_grp, continuous mode only)] [phases (D*L_seq*L_grp)]

and the loss is

    L = w1 * APSL + w2 * CPSL + sigma * max(PAPR_dB - p_th_dB, 0)

with APSL/CPSL as amplitude ratios against the auto-AF peak (or in dB with
``units="db"``). Gradients are computed by a hand-written reverse pass
through energy normalization, the zero-padded IDFT, the Doppler ramps and the
FFT-based AF; the maxima use the subgradient at their first achieving index,
or a log-sum-exp relaxation when ``smoothing`` is set. In the discrete-phase
mode the quantizer is treated as the identity on the way back.

Complex gradients follow the convention ``g = dL/dRe(z) + 1j * dL/dIm(z)``.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegenerateInputError
from .io import db_round, read_real_vector, write_array, write_json
from .metrics import (
    AfSpectra,
    DopplerGrid,
    default_b,
    papr_per_symbol,
    scan_peaks,
    to_db_amplitude,
)
from .waveform import (
    Preprocessor,
    SequenceGroupSet,
    WaveformParams,
    delay_time_to_tf,
    tf_to_delay_time,
)

log = logging.getLogger(__name__)

CONTINUOUS = "continuous"
UNIMODULAR = "unimodular-continuous"
DISCRETE = "unimodular-discrete"
MODES = (CONTINUOUS, UNIMODULAR, DISCRETE)

_DB_PER_NEPER_POWER = 10.0 / math.log(10.0)
_TIE_TOL = 1e-12


def default_phase_set(B: int) -> np.ndarray:
    """``B`` phases ``pi/B + 2*pi*q/B``, sorted in ``[0, 2*pi)``."""
    return np.sort(np.mod(np.pi / B + 2 * np.pi * np.arange(B) / B, 2 * np.pi))


@dataclass(frozen=True)
class ConstraintMode:
    """Sequence-element constraint.

    ``omega`` holds the sorted candidate phases of the discrete mode (default
    ``pi/B + 2*pi*q/B``). ``circular=True`` measures quantization distance
    around the circle instead of on ``[0, 2*pi)``.
    """

    tag: str = UNIMODULAR
    B_phases: int = 4
    omega: tuple[float, ...] | None = None
    circular: bool = False

    def __post_init__(self):
        if self.tag not in MODES:
            raise ConfigError(f"unknown constraint mode {self.tag!r}; expected one of {MODES}")
        if self.omega is None:
            object.__setattr__(self, "omega", tuple(float(x) for x in default_phase_set(self.B_phases)))
        om = np.asarray(self.omega, dtype=float)
        if self.tag == DISCRETE:
            if self.B_phases < 2 or om.size != self.B_phases:
                raise ConfigError(f"discrete mode needs B >= 2 phases, got B={self.B_phases}, |omega|={om.size}")
        if om.size and (np.any(np.diff(om) <= 0) or om[0] < 0 or om[-1] >= 2 * np.pi):
            raise ConfigError("omega must be strictly increasing within [0, 2*pi)")

    @property
    def unimodular(self) -> bool:
        return self.tag != CONTINUOUS


def quantize_phases(theta, omega, circular: bool = False) -> np.ndarray:
    """Map each phase to the nearest entry of the sorted set ``omega``.

    Distances are ``|theta mod 2*pi - omega_q|`` with no wraparound unless
    ``circular``; ties go to the smaller phase.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.size == 0:
        raise ConfigError("phase set is empty")
    theta = np.asarray(theta, dtype=float)
    wrapped = np.mod(theta, 2 * np.pi)
    dist = np.abs(wrapped[..., None] - omega)
    if circular:
        dist = np.minimum(dist, 2 * np.pi - dist)
    # near-ties (e.g. pi between 3pi/4 and 5pi/4) must resolve to the smaller phase
    best = dist.min(axis=-1, keepdims=True)
    idx = np.argmax(dist <= best + _TIE_TOL, axis=-1)
    return omega[idx]


@dataclass(frozen=True)
class ParamLayout:
    """Position of the FDSS, amplitude and phase blocks inside ``W``."""

    D: int
    L_seq: int
    L_grp: int
    M: int
    amplitudes: bool
    fdss: bool

    @classmethod
    def build(cls, pre: Preprocessor, D: int, mode: ConstraintMode, optimize_fdss: bool) -> "ParamLayout":
        return cls(D, pre.L_seq, pre.L_grp, pre.M, mode.tag == CONTINUOUS, bool(optimize_fdss))

    @property
    def n_seq(self) -> int:
        return self.D * self.L_seq * self.L_grp

    @property
    def G(self) -> int:
        return self.M * self.fdss + (1 + self.amplitudes) * self.n_seq

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.D, self.L_seq, self.L_grp)

    def split(self, W):
        """Views ``(fdss | None, amplitudes | None, phases)`` into ``W``."""
        W = np.asarray(W, dtype=float)
        if W.shape != (self.G,):
            raise ConfigError(f"parameter vector has shape {W.shape}, layout expects ({self.G},)")
        pos = 0
        fdss = amp = None
        if self.fdss:
            fdss = W[:self.M]
            pos = self.M
        if self.amplitudes:
            amp = W[pos:pos + self.n_seq].reshape(self.shape)
            pos += self.n_seq
        phase = W[pos:pos + self.n_seq].reshape(self.shape)
        return fdss, amp, phase

    def join(self, fdss=None, amp=None, phase=None) -> np.ndarray:
        parts = []
        if self.fdss:
            parts.append(np.zeros(self.M) if fdss is None else np.ravel(fdss))
        if self.amplitudes:
            parts.append(np.ones(self.n_seq) if amp is None else np.ravel(amp))
        parts.append(np.zeros(self.n_seq) if phase is None else np.ravel(phase))
        return np.concatenate(parts).astype(float)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class LossConfig:
    """Weights, penalty and evaluation region of the loss.

    ``b=None`` uses ``round(N/M)``; ``f_b=None`` uses the grid's ``f_D``.
    ``units`` is ``"linear"`` (AF terms as amplitude ratios) or ``"db"``.
    ``smoothing`` replaces each AF maximum with a log-sum-exp at that temperature.
    """

    grid: DopplerGrid
    omega1: float = 0.5
    omega2: float = 0.5
    sigma: float = 1.0
    p_th_db: float = 2.0
    b: int | None = None
    f_b: float | None = None
    units: str = "linear"
    smoothing: float | None = None
    full_doppler: bool = False

    def __post_init__(self):
        if not (0 <= self.omega1 <= 1 and 0 <= self.omega2 <= 1):
            raise ConfigError("loss weights must lie in [0, 1]")
        if abs(self.omega1 + self.omega2 - 1) > 1e-12:
            raise ConfigError(f"loss weights must sum to 1, got {self.omega1} + {self.omega2}")
        if self.sigma <= 0:
            raise ConfigError(f"penalty factor must be positive, got {self.sigma}")
        if self.units not in ("linear", "db"):
            raise ConfigError(f"units must be 'linear' or 'db', got {self.units!r}")
        if self.smoothing is not None and self.smoothing <= 0:
            raise ConfigError("smoothing temperature must be positive")


@dataclass(frozen=True, eq=False)
class Problem:
    """Everything the loss depends on apart from ``W``.

    When FDSS is not optimized the preprocessor's own ``c`` is used. With
    ``optimize_fdss`` the FDSS block of ``W`` becomes ``c`` through ``|w|``
    (``fdss_map="abs"``) or as-is (``"signed"``).
    """

    pre: Preprocessor
    params: WaveformParams
    mode: ConstraintMode
    cfg: LossConfig
    optimize_fdss: bool = False
    fdss_map: str = "abs"

    def __post_init__(self):
        if self.fdss_map not in ("abs", "signed"):
            raise ConfigError(f"fdss_map must be 'abs' or 'signed', got {self.fdss_map!r}")
        if (self.pre.M, self.pre.K) != (self.params.M, self.params.K):
            raise ConfigError("preprocessor dimensions do not match the waveform parameters")
        if self.params.D < 2 and self.cfg.omega2 > 0:
            raise ConfigError("CPSL needs D >= 2; set omega2 = 0 for a single group")
        self.cfg.grid.check(self.params)
        b = self.b
        if b < 1 or 2 * b + 1 >= self.params.N:
            raise ConfigError(f"mainlobe exclusion b={b} is invalid for N={self.params.N}")

    @property
    def layout(self) -> ParamLayout:
        return ParamLayout.build(self.pre, self.params.D, self.mode, self.optimize_fdss)

    @property
    def b(self) -> int:
        return default_b(self.params) if self.cfg.b is None else int(self.cfg.b)

    @property
    def f_b(self) -> float:
        return self.cfg.grid.f_D if self.cfg.f_b is None else float(self.cfg.f_b)

    @property
    def auto_doppler(self) -> np.ndarray:
        grid = self.cfg.grid
        return np.ones(grid.J, dtype=bool) if self.cfg.full_doppler else grid.within(self.f_b)


def materialize(W, problem: Problem) -> tuple[SequenceGroupSet, np.ndarray]:
    """Sequence group set and FDSS vector encoded by ``W``."""
    layout = problem.layout
    fdss, amp, phase = layout.split(W)
    mode = problem.mode
    if mode.tag == DISCRETE:
        phase = quantize_phases(phase, mode.omega, mode.circular)
    S = np.exp(1j * phase)
    if amp is not None:
        S = amp * S
    if fdss is None:
        c = problem.pre.c
    else:
        c = (np.abs(fdss) if problem.fdss_map == "abs" else fdss).astype(np.complex128)
    return SequenceGroupSet(S, mode.tag), c


@dataclass(frozen=True)
class LossBreakdown:
    loss: float
    apsl: float
    cpsl: float | None
    papr_db: float
    penalty: float
    apsl_at: tuple | None = None
    cpsl_at: tuple | None = None
    papr_at: tuple | None = None

    @property
    def apsl_db(self) -> float:
        return to_db_amplitude(self.apsl)

    @property
    def cpsl_db(self) -> float | None:
        return None if self.cpsl is None else to_db_amplitude(self.cpsl)


@dataclass
class _Forward:
    S: np.ndarray
    c: np.ndarray
    V: np.ndarray
    Z: np.ndarray
    norms: np.ndarray
    spectra: AfSpectra
    parts: LossBreakdown
    lse: dict = field(default_factory=dict)


def _af_value(spectra: AfSpectra, P: int, Q: int, r: int, tau: int) -> complex:
    G = np.sum(spectra.Zh[P].conj() * spectra.Yh[Q, r], axis=-1)
    m = np.arange(spectra.N)
    return complex(G @ np.exp(-2j * np.pi * m * tau / spectra.N) / spectra.N)


def _term(ratio: float, weight: float, units: str) -> float:
    if weight == 0:
        return 0.0
    if units == "db":
        return weight * 20.0 * math.log10(max(ratio, 1e-300))
    return weight * ratio


def _lse_scan(spectra: AfSpectra, b: int, auto_dop: np.ndarray, temp: float, K: int):
    """Log-sum-exp of ``|AF|/K / temp`` over the auto region and the cross pairs."""
    acc = {"auto": [-np.inf, 0.0], "cross": [-np.inf, 0.0]}
    N = spectra.N

    def add(key, x):
        if x.size == 0:
            return
        m = float(x.max())
        run_m, run_s = acc[key]
        new_m = max(run_m, m)
        acc[key] = [new_m, run_s * math.exp(run_m - new_m) + float(np.exp(x - new_m).sum())]

    for P in range(spectra.D):
        mag = np.abs(spectra.row_block(P)) / K / temp
        add("auto", mag[P][auto_dop, b + 1:N - b])
        if spectra.D > 1:
            add("cross", np.delete(mag, P, axis=0))
    return {k: (m + math.log(s) if s > 0 else -np.inf) for k, (m, s) in acc.items()}


def _forward(W, problem: Problem) -> _Forward:
    params, cfg = problem.params, problem.cfg
    groupset, c = materialize(W, problem)
    S = groupset.groups
    V = problem.pre.B @ S @ problem.pre.A
    Z_raw = tf_to_delay_time(c[:, None] * V, params.N)
    norms = np.sqrt(np.sum(np.abs(Z_raw) ** 2, axis=1, keepdims=True))
    if np.any(norms == 0):
        raise DegenerateInputError("an OFDM symbol vanished; cannot normalize")
    Z = Z_raw / norms
    spectra = AfSpectra.build(Z, cfg.grid, params)
    K = params.K

    ratios = papr_per_symbol(Z)
    d_k = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
    papr_db = _DB_PER_NEPER_POWER * math.log(float(ratios[d_k]))
    n_star = int(np.argmax(np.abs(Z[d_k[0], :, d_k[1]])))
    penalty = max(papr_db - cfg.p_th_db, 0.0)

    lse = {}
    if cfg.smoothing is None:
        peaks = scan_peaks(spectra, problem.b, problem.auto_doppler)
        apsl = peaks.auto_mag / K
        cpsl = peaks.cross_mag / K if params.D > 1 else None
        apsl_at, cpsl_at = peaks.auto_at, peaks.cross_at
    else:
        temp = cfg.smoothing
        lse = _lse_scan(spectra, problem.b, problem.auto_doppler, temp, K)
        apsl = temp * lse["auto"]
        cpsl = temp * lse["cross"] if params.D > 1 else None
        apsl_at = cpsl_at = None

    loss = (_term(apsl, cfg.omega1, cfg.units)
            + (_term(cpsl, cfg.omega2, cfg.units) if cpsl is not None else 0.0)
            + cfg.sigma * penalty)
    parts = LossBreakdown(loss, apsl, cpsl, papr_db, penalty, apsl_at, cpsl_at,
                          (int(d_k[0]), int(d_k[1]), n_star))
    return _Forward(S, c, V, Z, norms, spectra, parts, lse)


def loss(W, problem: Problem) -> LossBreakdown:
    """Loss value with its APSL, CPSL and PAPR components."""
    return _forward(W, problem).parts


def _mag_grad(v: complex, weight: float, K: int, units: str) -> complex:
    """Gradient of ``weight * term(|v| / K)`` with respect to ``v``."""
    a = abs(v)
    if a == 0 or weight == 0:
        return 0j
    if units == "db":
        return weight * 20.0 / math.log(10.0) * v / (a * a)
    return weight * v / (a * K)


def _af_backward(spectra: AfSpectra, blocks: dict[int, np.ndarray]) -> np.ndarray:
    """Pull AF gradients ``blocks[P][Q, r, tau]`` back to the normalized signals."""
    D, N, K = spectra.Z.shape
    g_Z = np.zeros_like(spectra.Z)
    g_Yh = np.zeros_like(spectra.Yh)
    for P, gb in blocks.items():
        g_G = np.fft.ifft(gb, axis=-1)
        g_Yh += g_G[..., None] * spectra.Zh[P][None, None]
        g_ZhP = np.einsum("qrm,qrmk->mk", g_G.conj(), spectra.Yh)
        g_Z[P] += N * np.fft.ifft(g_ZhP, axis=0)
    g_Y = N * np.fft.ifft(g_Yh, axis=2)
    g_Z += np.einsum("rnk,drnk->dnk", spectra.ramp.conj(), g_Y)
    return g_Z


def _lse_blocks(fw: _Forward, problem: Problem) -> dict[int, np.ndarray]:
    cfg = problem.cfg
    spectra, K, N = fw.spectra, problem.params.K, problem.params.N
    temp, b, dop = cfg.smoothing, problem.b, problem.auto_doppler
    blocks = {}
    for P in range(spectra.D):
        af = spectra.row_block(P)
        mag = np.abs(af)
        safe = np.where(mag > 0, mag, 1.0)
        unit = np.where(mag > 0, af / safe, 0)
        gb = np.zeros_like(af)
        if cfg.omega1:
            w = np.zeros(mag.shape[1:])
            sub = mag[P][:, b + 1:N - b] / K / temp
            w[:, b + 1:N - b] = np.exp(sub - fw.lse["auto"])
            w[~dop] = 0.0
            coef = cfg.omega1 * (20.0 / math.log(10.0) / fw.parts.apsl if cfg.units == "db" else 1.0)
            gb[P] += coef * w * unit[P] / K
        if cfg.omega2 and spectra.D > 1:
            w = np.exp(mag / K / temp - fw.lse["cross"])
            w[P] = 0.0
            coef = cfg.omega2 * (20.0 / math.log(10.0) / fw.parts.cpsl if cfg.units == "db" else 1.0)
            gb += coef * w * unit / K
        blocks[P] = gb
    return blocks


def _backward(fw: _Forward, W, problem: Problem) -> np.ndarray:
    cfg, params = problem.cfg, problem.params
    K, N = params.K, params.N
    parts = fw.parts

    if cfg.smoothing is None:
        blocks: dict[int, np.ndarray] = {}
        shape = (params.D, cfg.grid.J, N)
        for at, weight, kind in ((parts.apsl_at, cfg.omega1, "auto"), (parts.cpsl_at, cfg.omega2, "cross")):
            if at is None or weight == 0:
                continue
            P, Q, r, tau = at
            v = _af_value(fw.spectra, P, Q, r, tau)
            blocks.setdefault(P, np.zeros(shape, dtype=np.complex128))
            blocks[P][Q, r, tau] += _mag_grad(v, weight, K, cfg.units)
    else:
        blocks = _lse_blocks(fw, problem)
    g_Zn = _af_backward(fw.spectra, blocks) if blocks else np.zeros_like(fw.Z)

    if parts.penalty > 0:
        d, k, n = parts.papr_at
        z = fw.Z[d, :, k]
        coef = cfg.sigma * _DB_PER_NEPER_POWER
        g_Zn[d, :, k] -= coef * 2.0 * z / np.sum(np.abs(z) ** 2)
        g_Zn[d, n, k] += coef * 2.0 * z[n] / abs(z[n]) ** 2

    # energy normalization Zn = Z / ||Z|| per column
    proj = np.sum((g_Zn.conj() * fw.Z).real, axis=1, keepdims=True)
    g_Z = (g_Zn - fw.Z * proj) / fw.norms

    g_X = delay_time_to_tf(g_Z, params.M)
    pre = problem.pre
    g_V = fw.c.conj()[:, None] * g_X
    g_S = pre.B.conj().T @ g_V @ pre.A.conj().T

    layout = problem.layout
    fdss, amp, phase = layout.split(W)
    g_phase = np.imag(g_S * fw.S.conj())
    # S = a e^{j theta}; take the phasor from theta since a may be negative
    g_amp = np.real(g_S * np.exp(-1j * phase)) if amp is not None else None
    g_fdss = None
    if fdss is not None:
        g_c = np.real(np.sum(fw.V.conj() * g_X, axis=(0, 2)))
        g_fdss = g_c * np.sign(fdss) if problem.fdss_map == "abs" else g_c
    return layout.join(g_fdss, g_amp, g_phase)


def loss_and_gradient(W, problem: Problem) -> tuple[LossBreakdown, np.ndarray]:
    fw = _forward(W, problem)
    return fw.parts, _backward(fw, W, problem)


def gradient(W, problem: Problem) -> np.ndarray:
    """Gradient of the loss with respect to ``W`` (straight-through in discrete mode)."""
    return loss_and_gradient(W, problem)[1]


# ---------------------------------------------------------------------------
# Adam


@dataclass(frozen=True)
class AdamState:
    """Adam moments. The step divides by ``sqrt(m2_hat + eps)``, with eps inside the root."""

    m1: np.ndarray
    m2: np.ndarray
    t: int = 0
    eta: float = 0.01
    rho1: float = 0.9
    rho2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, G: int, **hyper) -> "AdamState":
        return cls(np.zeros(G), np.zeros(G), 0, **hyper)


def adam_step(state: AdamState, W, g) -> tuple[AdamState, np.ndarray]:
    W = np.asarray(W, dtype=float)
    g = np.asarray(g, dtype=float)
    t = state.t + 1
    m1 = state.rho1 * state.m1 + (1 - state.rho1) * g
    m2 = state.rho2 * state.m2 + (1 - state.rho2) * g * g
    m1_hat = m1 / (1 - state.rho1 ** t)
    m2_hat = m2 / (1 - state.rho2 ** t)
    W_next = W - state.eta * m1_hat / np.sqrt(m2_hat + state.eps)
    return dataclasses.replace(state, m1=m1, m2=m2, t=t), W_next


# ---------------------------------------------------------------------------
# driver


@dataclass(frozen=True)
class TraceRow:
    iter: int
    loss: float
    apsl_db: float
    cpsl_db: float | None
    papr_db: float


@dataclass
class OptimizeResult:
    problem: Problem
    best_W: np.ndarray
    best: LossBreakdown
    best_iter: int
    trace: list[TraceRow]
    best_trace: list[float]
    W: np.ndarray
    state: AdamState
    seed: int | None = None

    @property
    def best_groupset(self) -> SequenceGroupSet:
        return materialize(self.best_W, self.problem)[0]

    @property
    def best_fdss(self) -> np.ndarray:
        return materialize(self.best_W, self.problem)[1]


def initial_parameters(problem: Problem, seed: int | None = 0, init=None) -> np.ndarray:
    """All-ones FDSS and amplitudes; phases uniform on ``[0, 2*pi)`` or taken from ``init``."""
    layout = problem.layout
    if init is None:
        phase = np.random.default_rng(seed).uniform(0.0, 2 * np.pi, size=layout.shape)
    else:
        S = init.groups if isinstance(init, SequenceGroupSet) else np.asarray(init)
        if S.shape != layout.shape:
            raise ConfigError(f"initial sequences have shape {S.shape}, layout expects {layout.shape}")
        phase = np.mod(np.angle(S), 2 * np.pi)
    fdss = np.ones(layout.M) if layout.fdss else None
    return layout.join(fdss, np.ones(layout.shape) if layout.amplitudes else None, phase)


def optimize(problem: Problem, T: int, eta: float = 0.01, seed: int | None = 0, init=None,
             rho1: float = 0.9, rho2: float = 0.999, eps: float = 1e-8,
             W0=None, state: AdamState | None = None, callback=None) -> OptimizeResult:
    """Run ``T`` Adam iterations from a fresh start or from ``(W0, state)``.

    The trace holds the metrics at the point each gradient was taken; the
    returned best point is the lowest loss seen, including the point left
    after the last step.
    """
    if T < 1:
        raise ConfigError(f"need at least one iteration, got T={T}")
    W = initial_parameters(problem, seed, init) if W0 is None else np.asarray(W0, dtype=float).copy()
    if state is None:
        state = AdamState.zeros(W.size, eta=eta, rho1=rho1, rho2=rho2, eps=eps)
    trace: list[TraceRow] = []
    best_trace: list[float] = []
    best_W, best, best_iter = None, None, -1

    for _ in range(T):
        it = state.t
        parts, g = loss_and_gradient(W, problem)
        trace.append(TraceRow(it, parts.loss, parts.apsl_db, parts.cpsl_db, parts.papr_db))
        if best is None or parts.loss < best.loss:
            best, best_W, best_iter = parts, W.copy(), it
        best_trace.append(best.loss)
        if callback is not None:
            callback(it, parts)
        state, W = adam_step(state, W, g)

    final = loss(W, problem)
    if final.loss < best.loss:
        best, best_W, best_iter = final, W.copy(), state.t
    log.debug("optimize: best loss %.6g at iteration %d", best.loss, best_iter)
    return OptimizeResult(problem, best_W, best, best_iter, trace, best_trace, W, state, seed)


def optimize_candidates(candidates_A, candidates_B, params: WaveformParams, mode: ConstraintMode,
                        cfg: LossConfig, T: int, c=None, optimize_fdss: bool = False,
                        **kwargs) -> list[OptimizeResult]:
    """Optimize separately for every pairing of candidate ``A`` and ``B`` matrices.

    Candidates may be raw matrices or :class:`Preprocessor` objects (whose
    matching factor is used). The sequence dimensions follow each pair's shapes.
    """
    results = []
    for A, B in itertools.product(candidates_A, candidates_B):
        A_mat = A.A if isinstance(A, Preprocessor) else A
        B_mat = B.B if isinstance(B, Preprocessor) else B
        if c is None and isinstance(B, Preprocessor):
            c_vec = B.c
        else:
            c_vec = c
        pre = Preprocessor.custom(A_mat, B_mat, c_vec)
        problem = Problem(pre, params, mode, cfg, optimize_fdss=optimize_fdss)
        results.append(optimize(problem, T, **kwargs))
    return results


# ---------------------------------------------------------------------------
# persistence

TRACE_COLUMNS = ("iter", "loss", "apsl_db", "cpsl_db", "papr_db")


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(TRACE_COLUMNS)
        for row in trace:
            out.writerow([row.iter, repr(float(row.loss)), db_round(row.apsl_db, 6),
                          db_round(row.cpsl_db, 6), db_round(row.papr_db, 6)])


def save_checkpoint(directory, result: OptimizeResult) -> Path:
    """Write ``checkpoint.json`` plus ``W``, ``m1``, ``m2`` and ``best_W`` arrays."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    st = result.state
    header = {
        "t": st.t, "eta": st.eta, "rho1": st.rho1, "rho2": st.rho2, "eps": st.eps,
        "G": int(result.W.size), "layout": result.problem.layout.to_dict(),
        "mode": result.problem.mode.tag, "seed": result.seed,
        "best_loss": float(result.best.loss), "best_iter": result.best_iter,
    }
    for name, arr in (("W", result.W), ("m1", st.m1), ("m2", st.m2), ("best_W", result.best_W)):
        write_array(directory / f"{name}.bin", arr)
    write_json(directory / "checkpoint.json", header)
    return directory / "checkpoint.json"


def load_checkpoint(directory, problem: Problem | None = None) -> tuple[np.ndarray, AdamState, dict]:
    """Read a checkpoint; with ``problem`` given, its layout must match."""
    directory = Path(directory)
    header = json.loads((directory / "checkpoint.json").read_text())
    W = read_real_vector(directory / "W.bin")
    m1 = read_real_vector(directory / "m1.bin")
    m2 = read_real_vector(directory / "m2.bin")
    if not (W.size == m1.size == m2.size == header["G"]):
        raise ConfigError(f"{directory}: checkpoint arrays disagree with G={header['G']}")
    if problem is not None and problem.layout.to_dict() != header["layout"]:
        raise ConfigError(f"{directory}: checkpoint layout {header['layout']} does not match the problem")
    state = AdamState(m1, m2, int(header["t"]), header["eta"], header["rho1"], header["rho2"], header["eps"])
    return W, state, header
