"""Command-line front end: ``gofdm {metrics,optimize,pareto,dump-af,print-config}``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure (rank or
degenerate input).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .baselines import baseline_scheme
from .config import ExperimentConfig
from .errors import ConfigError, DegenerateInputError, RankError
from .io import db_round, read_real_vector, write_array, write_json
from .metrics import evaluate
from .optimizer import (
    Problem,
    initial_parameters,
    load_checkpoint,
    materialize,
    optimize,
    save_checkpoint,
    write_trace,
)
from .pareto import sweep, write_front_csv

log = logging.getLogger("gofdm")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig.default()
    changes = {}
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output_dir"] = args.out
    return cfg.replace(**changes) if changes else cfg


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump_surfaces(directory: Path, surfaces) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for (P, Q), surf in sorted(surfaces.items()):
        write_array(directory / f"af_{P}_{Q}.bin", surf.values)


def _report(name: str, cfg: ExperimentConfig, pre, report) -> dict:
    dims = dataclasses.asdict(cfg.waveform)
    dims["kind"] = pre.kind
    return {"name": name, "seed": cfg.seed, "waveform": dims, **report.to_dict()}


def _sets_to_measure(cfg: ExperimentConfig, args):
    """Yield ``(name, groupset, preprocessor)`` for baselines or a checkpoint."""
    params = cfg.params()
    if args.checkpoint:
        yield _checkpoint_set(cfg, Path(args.checkpoint))
        return
    names = [args.scheme] if args.scheme else list(cfg.baselines.schemes)
    for name in names:
        groupset, pre = baseline_scheme(name, params, seed=cfg.seed, roll_off=cfg.baselines.roll_off)
        yield name, groupset, pre


def _problem(cfg: ExperimentConfig, pre) -> Problem:
    opt = cfg.optimizer
    return Problem(pre, cfg.params(), cfg.constraint_mode(), cfg.loss_config(),
                   optimize_fdss=opt.optimize_fdss, fdss_map=opt.fdss_map)


def _checkpoint_set(cfg: ExperimentConfig, directory: Path):
    header = json.loads((directory / "checkpoint.json").read_text())
    label = header.get("candidate")
    cands = dict(cfg.preprocessors())
    if label not in cands:
        raise ConfigError(f"{directory}: candidate {label!r} is not produced by this config")
    problem = _problem(cfg, cands[label])
    W = read_real_vector(directory / "best_W.bin")
    groupset, c = materialize(W, problem)
    return label, groupset, problem.pre.with_fdss(c)


def cmd_metrics(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(cfg)
    for name, groupset, pre in _sets_to_measure(cfg, args):
        report, surfaces = evaluate(groupset, pre, cfg.params(), cfg.grid(), return_surfaces=True)
        write_json(out / f"metrics_{name}.json", _report(name, cfg, pre, report))
        if args.dump_af:
            _dump_surfaces(out / f"af_{name}", surfaces)
        log.info("%s: %s", name, report.to_dict())
    return EXIT_OK


def cmd_dump_af(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(cfg)
    for name, groupset, pre in _sets_to_measure(cfg, args):
        _, surfaces = evaluate(groupset, pre, cfg.params(), cfg.grid(), return_surfaces=True)
        _dump_surfaces(out / f"af_{name}", surfaces)
    return EXIT_OK


def cmd_optimize(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(cfg)
    opt = cfg.optimizer
    T = args.iterations or opt.T
    for label, pre in cfg.preprocessors():
        problem = _problem(cfg, pre)
        cand_dir = out / label
        W0 = state = None
        prior_trace: list[str] = []
        if args.resume:
            W0, state, _ = load_checkpoint(cand_dir, problem)
            trace_path = cand_dir / "trace.csv"
            if trace_path.exists():
                prior_trace = trace_path.read_text().splitlines()[1:]
        init = None
        if W0 is None and opt.init != "random":
            init, _ = baseline_scheme(opt.init, cfg.params(), seed=cfg.seed, roll_off=cfg.baselines.roll_off)
            initial_parameters(problem, cfg.seed, init)  # shape check before the run
        result = optimize(problem, T, eta=opt.eta, seed=cfg.seed, init=init, rho1=opt.rho1,
                          rho2=opt.rho2, eps=opt.eps, W0=W0, state=state)
        save_checkpoint(cand_dir, result)
        header_path = cand_dir / "checkpoint.json"
        header = json.loads(header_path.read_text())
        header["candidate"] = label
        write_json(header_path, header)
        write_trace(cand_dir / "trace.csv", result.trace)
        if prior_trace:
            new_rows = (cand_dir / "trace.csv").read_text().splitlines()
            (cand_dir / "trace.csv").write_text("\n".join(new_rows[:1] + prior_trace + new_rows[1:]) + "\n")
        groupset, c = materialize(result.best_W, problem)
        final_pre = pre.with_fdss(c)
        report = evaluate(groupset, final_pre, cfg.params(), cfg.grid())
        summary = _report(label, cfg, final_pre, report)
        summary["best_loss"] = float(result.best.loss)
        summary["best_iter"] = result.best_iter
        summary["iterations"] = result.state.t
        write_json(cand_dir / "metrics.json", summary)
        log.info("%s: best loss %.6g, %s", label, result.best.loss, report.to_dict())
    return EXIT_OK


def cmd_pareto(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(cfg)
    par = cfg.pareto
    (label, pre), *_ = cfg.preprocessors()
    result = sweep(par.omega1_grid, par.p_th_grid, pre, cfg.params(), cfg.loss_config(),
                   T=par.T, eta=par.eta, restarts=par.restarts, master_seed=cfg.seed,
                   threads=max(1, args.threads))
    write_front_csv(out / "front.csv", result)
    turning = {str(k): {"apsl_db": db_round(p.apsl_db), "cpsl_db": db_round(p.cpsl_db),
                        "papr_db": db_round(p.papr_db), "omega1": p.omega1}
               for k, p in result.turning.items()}
    write_json(out / "front_summary.json", {"waveform": label, "turning_points": turning,
                                            "n_points": len(result.points), "n_front": len(result.front)})
    return EXIT_OK


def cmd_print_config(cfg: ExperimentConfig, args) -> int:
    sys.stdout.write(cfg.dumps())
    return EXIT_OK


COMMANDS = {
    "metrics": cmd_metrics,
    "optimize": cmd_optimize,
    "pareto": cmd_pareto,
    "dump-af": cmd_dump_af,
    "print-config": cmd_print_config,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment JSON (default: shipped full-scale config)")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed override")
    common.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads for sweeps")
    common.add_argument("--out", metavar="DIR", help="output directory override")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gofdm", description="Generalized OFDM waveform and sequence design")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("metrics", "dump-af"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--scheme", help="single baseline scheme (default: all configured)")
        p.add_argument("--checkpoint", metavar="DIR", help="measure the best point of an optimize run")
        if name == "metrics":
            p.add_argument("--dump-af", action="store_true", help="also write every pair's AF surface")
    p = sub.add_parser("optimize", parents=[common])
    p.add_argument("--iterations", type=int, help="override optimizer.T")
    p.add_argument("--resume", action="store_true", help="continue from the checkpoints in the output directory")
    sub.add_parser("pareto", parents=[common])
    sub.add_parser("print-config", parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not hasattr(args, "dump_af"):
        args.dump_af = False
    try:
        cfg = _load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (RankError, DegenerateInputError) as exc:
        print(f"gofdm: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, FileNotFoundError) as exc:
        print(f"gofdm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
