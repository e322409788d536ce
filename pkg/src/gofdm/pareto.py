"""PAPR/APSL/CPSL tradeoff sweeps, non-dominated filtering and the turning point.

The sweep optimizes unconstrained (continuous amplitude and phase) sequences
for every ``(omega1, p_th)`` cell with several random starts, so the front it
produces is an inner approximation of the achievable tradeoff, not a bound.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .io import db_round
from .optimizer import CONTINUOUS, ConstraintMode, LossConfig, Problem, optimize
from .waveform import Preprocessor, WaveformParams

FRONT_COLUMNS = ("omega1", "p_th_db", "seed", "papr_db", "apsl_db", "cpsl_db", "is_pareto", "is_turning_point")


@dataclass(frozen=True)
class TradeoffPoint:
    papr_db: float
    apsl_db: float
    cpsl_db: float
    omega1: float | None = None
    p_th_db: float | None = None
    seed: int | None = None
    kind: str | None = None
    restart: int = 0
    cell_best: bool = True

    def __post_init__(self):
        vals = (self.papr_db, self.apsl_db, self.cpsl_db)
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError(f"tradeoff point values must be finite, got {vals}")
        if self.papr_db < 0:
            raise ConfigError(f"PAPR cannot be negative, got {self.papr_db}")

    @property
    def objectives(self) -> tuple[float, float, float]:
        return (self.papr_db, self.apsl_db, self.cpsl_db)


def dominates(a: TradeoffPoint, b: TradeoffPoint) -> bool:
    """``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    oa, ob = a.objectives, b.objectives
    return all(x <= y for x, y in zip(oa, ob)) and any(x < y for x, y in zip(oa, ob))


def pareto_filter(points) -> list[TradeoffPoint]:
    """Non-dominated points (all objectives minimized), stably sorted by APSL."""
    points = list(points)
    if not points:
        return []
    obj = np.array([p.objectives for p in points])
    keep = []
    for i in range(len(points)):
        no_worse = np.all(obj <= obj[i], axis=1)
        better = np.any(obj < obj[i], axis=1)
        if not np.any(no_worse & better):
            keep.append(i)
    return sorted((points[i] for i in keep), key=lambda p: p.apsl_db)


def _slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = x.size
    s = np.empty(n)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s[0] = (y[1] - y[0]) / (x[1] - x[0])
        s[-1] = (y[-1] - y[-2]) / (x[-1] - x[-2])
        s[1:-1] = (y[2:] - y[:-2]) / (x[2:] - x[:-2])
    return s


def turning_point(points, papr_db: float | None = None, tol: float = 0.05) -> TradeoffPoint:
    """Point of the APSL-versus-CPSL curve whose slope is nearest -1.

    Points are sorted by CPSL; slopes are central differences, one-sided at
    the two ends. With ``papr_db`` given only points within ``tol`` dB of that
    PAPR are used. Equal distances go to the lowest CPSL.
    """
    pts = list(points)
    if papr_db is not None:
        pts = [p for p in pts if abs(p.papr_db - papr_db) <= tol]
    if len(pts) < 3:
        raise ConfigError(f"turning point needs at least 3 points, got {len(pts)}")
    order = sorted(range(len(pts)), key=lambda i: (pts[i].cpsl_db, i))
    pts = [pts[i] for i in order]
    x = np.array([p.cpsl_db for p in pts])
    y = np.array([p.apsl_db for p in pts])
    dist = np.abs(_slopes(x, y) + 1.0)
    dist = np.where(np.isfinite(dist), dist, np.inf)
    if not np.isfinite(dist).any():
        raise ConfigError("turning point is undefined: every slope is degenerate")
    lowest = dist.min()
    tied = [i for i in range(len(pts)) if dist[i] <= lowest + 1e-12 * max(1.0, lowest)]
    return pts[tied[0]]


def _two_d_front(points) -> list[TradeoffPoint]:
    out = []
    for p in points:
        if not any(q.apsl_db <= p.apsl_db and q.cpsl_db <= p.cpsl_db
                   and (q.apsl_db < p.apsl_db or q.cpsl_db < p.cpsl_db) for q in points):
            out.append(p)
    return out


def cell_seed(master: int, cell: int, restart: int) -> int:
    """Deterministic per-start seed derived from ``(master, cell, restart)``."""
    return int(np.random.SeedSequence([master, cell, restart]).generate_state(1)[0])


@dataclass
class SweepResult:
    points: list[TradeoffPoint]
    best: list[TradeoffPoint]
    front: list[TradeoffPoint]
    turning: dict[float, TradeoffPoint]

    def best_apsl_by_p_th(self) -> dict[float, float]:
        out: dict[float, float] = {}
        for p in self.best:
            out[p.p_th_db] = min(out.get(p.p_th_db, math.inf), p.apsl_db)
        return out


def sweep(omega1_grid, p_th_grid, pre: Preprocessor, params: WaveformParams, base: LossConfig,
          T: int = 300, eta: float = 0.01, restarts: int = 4, master_seed: int = 0,
          threads: int = 1, mode: ConstraintMode | None = None) -> SweepResult:
    """Optimize every ``(omega1, p_th)`` cell from ``restarts`` random starts.

    Every start is recorded; the lowest-loss start of each cell is its
    representative. ``mode`` defaults to continuous amplitude and phase.
    """
    omega1_grid = [float(w) for w in omega1_grid]
    p_th_grid = [float(p) for p in p_th_grid]
    if not omega1_grid or not p_th_grid:
        raise ConfigError("sweep grids must be nonempty")
    if restarts < 1:
        raise ConfigError(f"need at least one start per cell, got {restarts}")
    mode = mode or ConstraintMode(CONTINUOUS)

    cells = list(itertools.product(omega1_grid, p_th_grid))
    jobs = [(ci, r) for ci in range(len(cells)) for r in range(restarts)]

    def run(job):
        ci, r = job
        w1, p_th = cells[ci]
        cfg = dataclasses.replace(base, omega1=w1, omega2=1.0 - w1, p_th_db=p_th)
        problem = Problem(pre, params, mode, cfg)
        seed = cell_seed(master_seed, ci, r)
        res = optimize(problem, T, eta=eta, seed=seed)
        return ci, r, seed, res.best

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(j) for j in jobs]

    points, best = [], []
    by_cell: dict[int, list] = {}
    for ci, r, seed, parts in outcomes:
        by_cell.setdefault(ci, []).append((parts.loss, r, seed, parts))
    for ci in range(len(cells)):
        w1, p_th = cells[ci]
        winner = min(by_cell[ci], key=lambda t: (t[0], t[1]))[1]
        for _, r, seed, parts in sorted(by_cell[ci], key=lambda t: t[1]):
            cpsl = parts.cpsl_db if parts.cpsl_db is not None else -300.0
            pt = TradeoffPoint(parts.papr_db, parts.apsl_db, cpsl, w1, p_th, seed, pre.kind, r, r == winner)
            points.append(pt)
            if r == winner:
                best.append(pt)

    front = pareto_filter(points)
    turning = {}
    for p_th in p_th_grid:
        level = _two_d_front([p for p in best if p.p_th_db == p_th])
        if len(level) < 3:
            level = [p for p in best if p.p_th_db == p_th]
        if len(level) >= 3:
            try:
                turning[p_th] = turning_point(level)
            except ConfigError:
                pass  # every slope degenerate at this level
    return SweepResult(points, best, front, turning)


def write_front_csv(path, result: SweepResult) -> None:
    front_ids = {id(p) for p in result.front}
    turning_ids = {id(p) for p in result.turning.values()}
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(FRONT_COLUMNS)
        for p in result.points:
            out.writerow([p.omega1, p.p_th_db, p.seed, db_round(p.papr_db), db_round(p.apsl_db),
                          db_round(p.cpsl_db), int(id(p) in front_ids), int(id(p) in turning_ids)])
