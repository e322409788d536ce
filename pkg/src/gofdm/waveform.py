"""Generalized OFDM waveform family.

A waveform is fixed by two preprocessing matrices ``A`` (``L_grp x K``) and
``B`` (``M x L_seq``) plus a per-subcarrier spectral-shaping vector ``c``.
A sequence group ``S`` (``L_seq x L_grp``) maps to the time-frequency grid

    X = diag(c) @ B @ S @ A                                   (M x K)

and each column of ``X`` is zero-padded onto ``N`` subcarriers and passed
through a unitary inverse DFT to give the delay-time signal ``Z`` (``N x K``).

All DFT matrices are unitary: ``F_n[m, i] = exp(-2j*pi*i*m/n) / sqrt(n)``.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, RankError

CP_OFDM = "CP-OFDM"
DFT_S_OFDM = "DFT-s-OFDM"
OTFS = "OTFS"
FTN_S_OFDM = "FTN-s-OFDM"
FTN_S_OTFS = "FTN-s-OTFS"
DFTN_S_OTFS = "DFTN-s-OTFS"
CUSTOM = "Custom"

WAVEFORM_KINDS = (CP_OFDM, DFT_S_OFDM, OTFS, FTN_S_OFDM, FTN_S_OTFS, DFTN_S_OTFS)

RANK_RTOL = 1e-10
COND_WARN = 1e8


def _ceil_ratio(n: int, factor: float) -> int:
    # guards against 204/0.3 = 680.0000000000001
    return int(math.ceil(round(n / factor, 9)))


@dataclass(frozen=True)
class WaveformParams:
    """Dimensions and timing of one waveform configuration.

    ``n_cp=None`` selects the NR normal-CP length scaled to ``N``
    (144 samples at ``N = 2048``).
    """

    M: int
    K: int
    N: int
    D: int = 1
    alpha: float = 1.0
    beta: float = 1.0
    delta_f: float = 120e3
    n_cp: int | None = None

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 < self.beta <= 1:
            raise ConfigError(f"beta must lie in (0, 1], got {self.beta}")
        if not 0 < self.M <= self.N:
            raise ConfigError(f"need 0 < M <= N, got M={self.M}, N={self.N}")
        if self.K < 1:
            raise ConfigError(f"K must be >= 1, got {self.K}")
        if self.D < 1:
            raise ConfigError(f"D must be >= 1, got {self.D}")
        if self.delta_f <= 0:
            raise ConfigError(f"delta_f must be positive, got {self.delta_f}")
        if self.n_cp is None:
            object.__setattr__(self, "n_cp", int(round(144 * self.N / 2048)))
        if self.n_cp < 0:
            raise ConfigError(f"n_cp must be >= 0, got {self.n_cp}")

    @property
    def T_s(self) -> float:
        return 1.0 / (self.N * self.delta_f)

    @property
    def T_c(self) -> float:
        return (self.N + self.n_cp) * self.T_s

    @property
    def L_seq(self) -> int:
        return _ceil_ratio(self.M, self.alpha)

    @property
    def L_grp(self) -> int:
        return _ceil_ratio(self.K, self.beta)

    def replace(self, **changes) -> "WaveformParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Preprocessor:
    """Matrices ``A`` (L_grp x K), ``B`` (M x L_seq) and shaping vector ``c`` (M,)."""

    kind: str
    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    rows: tuple = field(default=())
    cols: tuple = field(default=())

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.complex128)
        B = np.asarray(self.B, dtype=np.complex128)
        c = np.asarray(self.c, dtype=np.complex128).reshape(-1)
        if A.ndim != 2 or B.ndim != 2:
            raise ConfigError("A and B must be 2-D matrices")
        if c.shape[0] != B.shape[0]:
            raise ConfigError(f"c has {c.shape[0]} entries but B has {B.shape[0]} rows")
        for arr in (A, B, c):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "c", c)

    @property
    def M(self) -> int:
        return self.B.shape[0]

    @property
    def K(self) -> int:
        return self.A.shape[1]

    @property
    def L_seq(self) -> int:
        return self.B.shape[1]

    @property
    def L_grp(self) -> int:
        return self.A.shape[0]

    @property
    def shaped_B(self) -> np.ndarray:
        """``diag(c) @ B``."""
        return self.c[:, None] * self.B

    def with_fdss(self, c) -> "Preprocessor":
        return dataclasses.replace(self, c=np.asarray(c))

    @classmethod
    def custom(cls, A, B, c=None) -> "Preprocessor":
        B = np.asarray(B)
        if c is None:
            c = np.ones(B.shape[0])
        return cls(CUSTOM, A, B, c)


@dataclass(frozen=True, eq=False)
class SequenceGroupSet:
    """``D`` sequence groups stacked as ``groups[d]`` of shape ``(L_seq, L_grp)``."""

    groups: np.ndarray
    mode: str = "continuous"

    def __post_init__(self):
        g = np.asarray(self.groups, dtype=np.complex128)
        if g.ndim != 3:
            raise ConfigError(f"groups must have shape (D, L_seq, L_grp), got {g.shape}")
        object.__setattr__(self, "groups", g)

    @property
    def D(self) -> int:
        return self.groups.shape[0]

    def __len__(self) -> int:
        return self.D

    def __getitem__(self, d: int) -> np.ndarray:
        return self.groups[d]


def dft_matrix(n: int) -> np.ndarray:
    """Unitary ``n``-point DFT matrix, entry ``(m, i) = exp(-2j*pi*i*m/n)/sqrt(n)``."""
    if n < 1:
        raise ConfigError(f"DFT size must be >= 1, got {n}")
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)


def _canonical_kind(kind: str) -> str:
    key = kind.strip().lower().replace("_", "-")
    for name in WAVEFORM_KINDS + (CUSTOM,):
        if name.lower() == key:
            return name
    raise ConfigError(f"unknown waveform kind {kind!r}; expected one of {WAVEFORM_KINDS}")


def build_preprocessor(kind: str, params: WaveformParams, c=None, rows=None, cols=None) -> Preprocessor:
    """Preprocessing matrices of one of the six named waveforms.

    ``rows`` / ``cols`` select the truncated DFT rows / columns for the FTN
    kinds and default to the leading ``M`` / ``K`` indices. The three
    orthogonal kinds require ``alpha = beta = 1``; the FTN kinds accept
    ``alpha = 1`` (where FTN-s-OFDM coincides with DFT-s-OFDM).
    """
    kind = _canonical_kind(kind)
    if kind == CUSTOM:
        raise ConfigError("use Preprocessor.custom(A, B, c) for custom waveforms")
    M, K = params.M, params.K
    L_seq, L_grp = params.L_seq, params.L_grp

    if kind in (CP_OFDM, DFT_S_OFDM, OTFS) and (params.alpha != 1 or params.beta != 1):
        raise ConfigError(f"{kind} requires alpha = beta = 1 (got {params.alpha}, {params.beta})")
    if kind in (FTN_S_OFDM, FTN_S_OTFS) and params.beta != 1:
        raise ConfigError(f"{kind} requires beta = 1 (got {params.beta})")

    rows = tuple(range(M)) if rows is None else tuple(int(r) for r in rows)
    cols = tuple(range(K)) if cols is None else tuple(int(k) for k in cols)
    if len(rows) != M or len(set(rows)) != M or min(rows) < 0 or max(rows) >= L_seq:
        raise ConfigError(f"row set must hold {M} distinct indices below {L_seq}")
    if len(cols) != K or len(set(cols)) != K or min(cols) < 0 or max(cols) >= L_grp:
        raise ConfigError(f"column set must hold {K} distinct indices below {L_grp}")

    if kind == CP_OFDM:
        A, B = np.eye(K), np.eye(M)
    elif kind == DFT_S_OFDM:
        A, B = np.eye(K), dft_matrix(M)
    elif kind == OTFS:
        A, B = dft_matrix(K).conj().T, dft_matrix(M)
    elif kind == FTN_S_OFDM:
        A, B = np.eye(K), dft_matrix(L_seq)[list(rows), :]
    elif kind == FTN_S_OTFS:
        A, B = dft_matrix(K).conj().T, dft_matrix(L_seq)[list(rows), :]
    else:
        A = dft_matrix(L_grp).conj().T[:, list(cols)]
        B = dft_matrix(L_seq)[list(rows), :]

    if c is None:
        c = np.ones(M)
    c = np.asarray(c)
    if c.shape != (M,):
        raise ConfigError(f"FDSS vector must have {M} entries, got shape {c.shape}")
    return Preprocessor(kind, A, B, c, rows, cols)


def synthesize_tf(S, pre: Preprocessor) -> np.ndarray:
    """Time-frequency grid ``diag(c) B S A``; ``S`` may carry leading batch axes."""
    S = np.asarray(S)
    if S.shape[-2:] != (pre.L_seq, pre.L_grp):
        raise ConfigError(
            f"sequence block has shape {S.shape[-2:]}, waveform expects {(pre.L_seq, pre.L_grp)}"
        )
    return pre.shaped_B @ S @ pre.A


def tf_to_delay_time(X, N: int) -> np.ndarray:
    """Unitary N-point IDFT of each column after mapping the M rows onto subcarriers 0..M-1."""
    X = np.asarray(X)
    M = X.shape[-2]
    if M > N:
        raise ConfigError(f"M={M} subcarriers do not fit an N={N} point IFFT")
    return np.fft.ifft(X, n=N, axis=-2, norm="ortho")


def delay_time_to_tf(Z, M: int) -> np.ndarray:
    """Adjoint of :func:`tf_to_delay_time`: unitary DFT then keep subcarriers 0..M-1."""
    return np.fft.fft(np.asarray(Z), axis=-2, norm="ortho")[..., :M, :]


def _check_rank(mat: np.ndarray, need: int, factor: str, what: str) -> None:
    sv = np.linalg.svd(mat, compute_uv=False)
    rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv.size and sv[0] > 0 else 0
    if rank < need:
        raise RankError(factor, f"{factor} must be {what} (rank {need}), numerical rank is {rank}")
    cond = sv[0] / sv[need - 1]
    if cond > COND_WARN:
        warnings.warn(f"{factor} is ill-conditioned (condition number {cond:.3g})", RuntimeWarning, stacklevel=3)


def recovery_operators(pre: Preprocessor) -> tuple[np.ndarray, np.ndarray]:
    """Left/right inverses ``(G_r, G_l)`` so that ``S = G_r X G_l`` reproduces ``X``.

    ``G_l = (A^H A)^-1 A^H`` and ``G_r = C^H (C C^H)^-1`` with ``C = diag(c) B``,
    built from the normal equations rather than a generic pseudoinverse.
    """
    A = pre.A
    C = pre.shaped_B
    _check_rank(A, pre.K, "A", "full column rank")
    _check_rank(C, pre.M, "diag(c)B", "full row rank")
    AH = A.conj().T
    CH = C.conj().T
    G_l = np.linalg.solve(AH @ A, AH)
    G_r = np.linalg.solve((C @ CH).T, CH.T).T
    return G_r, G_l


def recover_sequences(X, pre: Preprocessor) -> np.ndarray:
    """Sequence block that synthesizes the given time-frequency grid under ``pre``."""
    X = np.asarray(X)
    if X.shape[-2:] != (pre.M, pre.K):
        raise ConfigError(f"grid has shape {X.shape[-2:]}, waveform expects {(pre.M, pre.K)}")
    G_r, G_l = recovery_operators(pre)
    return G_r @ X @ G_l


def effective_pulse(u, c, N: int):
    """Effective pulse ``g(u) = N^-1/2 sum_t c_t exp(2j*pi*t*u/N)`` for real ``u``."""
    c = np.asarray(c)
    t = np.arange(c.shape[0])
    u = np.asarray(u, dtype=float)
    val = np.exp(2j * np.pi * np.multiply.outer(u, t) / N) @ c / np.sqrt(N)
    return val[()] if val.ndim == 0 else val
