"""Acceptance gate: one pass/fail line per criterion, printed in the terminal summary.

Criteria 9 and 10 run at the full default configuration. Criterion 9 takes a
few seconds and always runs. Criterion 10 is an hour-scale optimization: set
``GOFDM_HEADLINE_CHECKPOINT`` to a finished ``gofdm optimize`` candidate
directory to grade it, or ``GOFDM_LONG=1`` to run it here.
"""

import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from gofdm.baselines import baseline_scheme, zc_sequence
from gofdm.config import ExperimentConfig
from gofdm.io import read_array
from gofdm.metrics import DopplerGrid, af_direct, af_surface_fft, evaluate, normalize_energy
from gofdm.optimizer import (
    UNIMODULAR,
    AdamState,
    ConstraintMode,
    LossConfig,
    Problem,
    adam_step,
    default_phase_set,
    load_checkpoint,
    loss,
    loss_and_gradient,
    materialize,
    optimize,
    quantize_phases,
)
from gofdm.pareto import _slopes, pareto_filter, sweep
from gofdm.waveform import (
    WAVEFORM_KINDS,
    WaveformParams,
    build_preprocessor,
    recover_sequences,
    synthesize_tf,
    tf_to_delay_time,
)

PI = np.pi


def record(number, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_criterion_01_af_fft_matches_direct():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        N = int(rng.choice([16, 32, 64]))
        K = int(rng.choice([1, 2, 4]))
        J = int(rng.choice([3, 5]))
        p = WaveformParams(M=N // 2, K=K, N=N)
        grid = DopplerGrid(float(rng.uniform(0.05, 0.45)) / (K * p.T_c), J)
        zp, zq = crandn(rng, N, K), crandn(rng, N, K)
        fast = af_surface_fft(zp, zq, grid, p).values
        for tau in range(N):
            for j, f in enumerate(grid.values):
                ref = af_direct(zp, zq, tau, f, p)
                worst = max(worst, abs(fast[tau, j] - ref) / max(abs(ref), 1e-300))
    elapsed = time.perf_counter() - start
    record(1, worst < 1e-9 and elapsed < 10.0, f"max rel err {worst:.2e} (< 1e-9), {elapsed:.2f} s (< 10 s)")


def test_criterion_02_recovery_round_trip():
    rng = np.random.default_rng(102)
    worst = 0.0
    for kind in WAVEFORM_KINDS:
        ftn = kind.startswith(("FTN", "DFTN"))
        doppler_ftn = kind.startswith("DFTN")
        p = WaveformParams(M=8, K=4, N=32, alpha=0.5 if ftn else 1.0, beta=0.5 if doppler_ftn else 1.0)
        c = rng.uniform(0.5, 1.5, 8) * np.exp(1j * rng.uniform(0, 2 * PI, 8))
        pre = build_preprocessor(kind, p, c=c)
        X = synthesize_tf(crandn(rng, pre.L_seq, pre.L_grp), pre)
        worst = max(worst, np.abs(synthesize_tf(recover_sequences(X, pre), pre) - X).max())
    record(2, worst < 1e-9, f"six waveforms, max |synth(recover(X)) - X| = {worst:.2e} (< 1e-9)")


def test_criterion_03_gradient_finite_differences():
    p = WaveformParams(M=8, K=2, N=32, D=2, alpha=0.5)
    grid = DopplerGrid(0.3 / (p.K * p.T_c), 3)
    problem = Problem(build_preprocessor("ftn-s-ofdm", p), p, ConstraintMode("continuous"),
                      LossConfig(grid=grid, p_th_db=1.0))
    rng = np.random.default_rng(103)
    W = np.concatenate([rng.uniform(0.5, 1.5, problem.layout.G // 2),
                        rng.uniform(0, 2 * PI, problem.layout.G // 2)])
    parts, g = loss_and_gradient(W, problem)
    coords = rng.choice(W.size, 20, replace=False)
    h = 1e-6
    errs, ties = [], []
    where = (parts.apsl_at, parts.cpsl_at, parts.papr_at)
    for i in coords:
        e = np.zeros_like(W)
        e[i] = h
        lp, lm = loss(W + e, problem), loss(W - e, problem)
        if any((q.apsl_at, q.cpsl_at, q.papr_at) != where for q in (lp, lm)):
            ties.append(int(i))
            continue
        fd = (lp.loss - lm.loss) / (2 * h)
        errs.append(abs(fd - g[i]) / max(abs(fd), abs(g[i]), 1e-8))
    worst = max(errs)
    record(3, worst < 1e-4 and len(errs) > 0,
           f"{len(errs)} coords, max rel err {worst:.2e} (< 1e-4); excluded at argmax ties: {ties}")


def test_criterion_04_adam():
    state = AdamState.zeros(1, eta=0.1)
    _, W1 = adam_step(state, np.zeros(1), np.ones(1))
    hand = -0.1 * 1.0 / np.sqrt(1.0 + 1e-8)  # both bias-corrected moments equal 1
    hand_ok = abs(W1[0] - (-0.099999999)) < 1e-9 and abs(W1[0] - hand) < 1e-15
    rng = np.random.default_rng(104)
    W = rng.standard_normal(50)
    st = AdamState.zeros(50)
    W_run = W.copy()
    for _ in range(25):
        st, W_run = adam_step(st, W_run, np.zeros(50))
    still = np.array_equal(W_run, W)
    record(4, hand_ok and still, f"hand trace W' = {W1[0]:.12f}; zero-gradient run bit-identical: {still}")


def test_criterion_05_quantizer():
    om = default_phase_set(4)
    theta = np.random.default_rng(105).uniform(-4 * PI, 4 * PI, 100_000)
    q = quantize_phases(theta, om)
    idem = np.array_equal(quantize_phases(q, om), q)
    examples = (quantize_phases(PI / 4, om) == PI / 4 and quantize_phases(0.0, om) == PI / 4
                and quantize_phases(PI, om) == 3 * PI / 4)
    record(5, idem and examples, f"idempotent on 1e5 phases: {idem}; worked examples exact: {examples}")


def test_criterion_06_zc_autocorrelation():
    worst = 0.0
    for n in (7, 31, 199):
        for u in (1, 2, n - 1):
            x = zc_sequence(n, u)
            r = np.array([np.vdot(np.roll(x, -tau), x) for tau in range(n)])
            worst = max(worst, np.abs(r[1:]).max() / abs(r[0]))
    record(6, worst < 1e-9, f"lengths 7/31/199, max relative sidelobe {worst:.2e} (< 1e-9)")


def test_criterion_07_mainlobe():
    p = WaveformParams(M=4, K=2, N=16)
    grid = DopplerGrid(0.3 / (p.K * p.T_c), 3)
    from gofdm.waveform import SequenceGroupSet
    ones = SequenceGroupSet(np.ones((1, 4, 2), dtype=complex))
    rep = evaluate(ones, build_preprocessor("cp-ofdm", p), p, grid)
    cfg = ExperimentConfig.default()
    full = cfg.params()
    gs, pre = baseline_scheme("dft-s-ofdm-gold-fdss", full)
    w1 = evaluate(gs, pre, full, cfg.grid()).w1
    ok = rep.b == 4 and rep.w1 == 1.0 and 1.3 <= w1 <= 1.5
    record(7, ok, f"all-ones b={rep.b}, W1={rep.w1}; RRC FDSS W1={w1:.4f} (in [1.3, 1.5])")


def test_criterion_08_optimization_smoke():
    p = WaveformParams(M=32, K=2, N=256, D=4, alpha=0.5)
    cfg = LossConfig(grid=DopplerGrid(7200.0, 5), p_th_db=2.0)
    problem = Problem(build_preprocessor("ftn-s-ofdm", p), p, ConstraintMode(UNIMODULAR), cfg)
    start = time.perf_counter()
    res = optimize(problem, 300, eta=0.03, seed=0)
    elapsed = time.perf_counter() - start
    final = loss(res.W, problem)
    monotone = all(b <= a for a, b in zip(res.best_trace, res.best_trace[1:]))
    gain = res.trace[0].apsl_db - final.apsl_db
    ok = monotone and gain >= 3.0 and final.papr_db <= cfg.p_th_db + 0.1 and elapsed < 300
    record(8, ok, f"best-so-far monotone: {monotone}; APSL gain {gain:.2f} dB (>= 3); "
                  f"final PAPR {final.papr_db:.2f} dB (<= 2.1); {elapsed:.1f} s (< 300 s)")


def test_criterion_09_zc_baseline_anchors():
    cfg = ExperimentConfig.default()
    params = cfg.params()
    gs, pre = baseline_scheme("cp-ofdm-zc", params)
    rep = evaluate(gs, pre, params, cfg.grid())
    target = {"apsl": -13.5, "cpsl": -17.4, "papr": 5.6}
    got = {"apsl": rep.apsl_db, "cpsl": rep.cpsl_db, "papr": rep.papr_db}
    ok = all(abs(got[k] - target[k]) <= 1.0 for k in target)
    record(9, ok, "CP-OFDM+ZC " + ", ".join(f"{k} {got[k]:.2f} dB (target {target[k]} +/- 1)" for k in target))


def _headline_problem():
    cfg = ExperimentConfig.default()
    label, pre = cfg.preprocessors()[0]
    return cfg, pre, Problem(pre, cfg.params(), cfg.constraint_mode(), cfg.loss_config())


def test_criterion_10_headline():
    ckpt = os.environ.get("GOFDM_HEADLINE_CHECKPOINT")
    if not ckpt and os.environ.get("GOFDM_LONG") != "1":
        ACCEPTANCE_LINES.append("criterion 10: SKIP  opt-in: set GOFDM_HEADLINE_CHECKPOINT or GOFDM_LONG=1")
        pytest.skip("hour-scale optimization is opt-in")
    cfg, pre, problem = _headline_problem()
    if ckpt:
        load_checkpoint(ckpt, problem)  # checks the layout
        W = read_array(os.path.join(ckpt, "best_W.bin")).ravel()
    else:
        W = optimize(problem, cfg.optimizer.T, eta=cfg.optimizer.eta, seed=cfg.seed).best_W
    gs, c = materialize(W, problem)
    rep = evaluate(gs, pre.with_fdss(c), cfg.params(), cfg.grid())
    ok = rep.apsl_db <= -19.6 and rep.cpsl_db <= -23.2 and rep.papr_db <= 2.0
    record(10, ok, f"APSL {rep.apsl_db:.2f} dB (<= -19.6), CPSL {rep.cpsl_db:.2f} dB (<= -23.2), "
                   f"PAPR {rep.papr_db:.2f} dB (<= 2.0)")


@pytest.fixture(scope="module")
def desk_sweep():
    p = WaveformParams(M=32, K=2, N=256, D=4)
    pre = build_preprocessor("cp-ofdm", p)
    base = LossConfig(grid=DopplerGrid(7200.0, 5))
    return sweep([0.25, 0.5, 0.75, 1.0], [1.0, 4.0], pre, p, base, T=300, eta=0.03, restarts=2, master_seed=0)


def test_criterion_11_pareto_desk(desk_sweep):
    res = desk_sweep
    front_ids = {id(q) for q in pareto_filter(res.points)}
    brute = {id(a) for a in res.points
             if not any(all(x <= y for x, y in zip(b.objectives, a.objectives)) and b.objectives != a.objectives
                        for b in res.points)}
    best = res.best_apsl_by_p_th()
    ok = front_ids == brute and bool(res.turning) and best[1.0] >= best[4.0]
    tp = next(iter(res.turning.values())) if res.turning else None
    record(11, ok, f"front matches brute force: {front_ids == brute}; turning point "
                   f"{'none' if tp is None else f'APSL {tp.apsl_db:.2f} / CPSL {tp.cpsl_db:.2f} dB'}; "
                   f"best APSL p_th=1: {best[1.0]:.2f} dB, p_th=4: {best[4.0]:.2f} dB")


def test_desk_sweep_is_l_shaped(desk_sweep):
    for p_th in (1.0, 4.0):
        level = sorted((q for q in desk_sweep.best if q.p_th_db == p_th), key=lambda q: q.cpsl_db)
        x = np.array([q.cpsl_db for q in level])
        y = np.array([q.apsl_db for q in level])
        slopes = np.abs(_slopes(x, y))
        assert slopes.min() < 1 < slopes.max()
