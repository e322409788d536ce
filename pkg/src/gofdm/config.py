"""Experiment configuration files (JSON) with strict key checking.

Errors raised while loading name the offending key and, when the text is
available, the line it sits on.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .baselines import DEFAULT_ROLL_OFF, SCHEMES
from .errors import ConfigError
from .metrics import DopplerGrid
from .optimizer import ConstraintMode, LossConfig
from .waveform import Preprocessor, WaveformParams, build_preprocessor

DEFAULT_CONFIG = "full_scale.json"


@dataclass(frozen=True)
class WaveformSection:
    kind: str = "ftn-s-ofdm"
    M: int = 204
    K: int = 4
    N: int = 2048
    D: int = 30
    alpha: float = 0.5
    beta: float = 1.0
    delta_f: float = 120e3
    n_cp: int | None = None


@dataclass(frozen=True)
class DopplerSection:
    f_D: float = 7200.0
    J: int = 9


@dataclass(frozen=True)
class LossSection:
    omega1: float = 0.5
    omega2: float = 0.5
    sigma: float = 1.0
    p_th_db: float = 2.0
    b: int | None = None
    f_b: float | None = None
    units: str = "linear"
    smoothing: float | None = None
    full_doppler: bool = False


@dataclass(frozen=True)
class ConstraintSection:
    mode: str = "continuous"
    B_phases: int = 4
    circular: bool = False


@dataclass(frozen=True)
class OptimizerSection:
    T: int = 5000
    eta: float = 0.01
    rho1: float = 0.9
    rho2: float = 0.999
    eps: float = 1e-8
    optimize_fdss: bool = False
    fdss_map: str = "abs"
    init: str = "random"
    candidates_A: tuple[str, ...] = ()
    candidates_B: tuple[str, ...] = ()


@dataclass(frozen=True)
class BaselineSection:
    schemes: tuple[str, ...] = SCHEMES
    roll_off: float = DEFAULT_ROLL_OFF


@dataclass(frozen=True)
class ParetoSection:
    omega1_grid: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    p_th_grid: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0)
    restarts: int = 4
    T: int = 1000
    eta: float = 0.01


_SECTIONS = {
    "waveform": WaveformSection,
    "doppler": DopplerSection,
    "loss": LossSection,
    "constraint": ConstraintSection,
    "optimizer": OptimizerSection,
    "baselines": BaselineSection,
    "pareto": ParetoSection,
}
_TOP_LEVEL = {"seed", "output_dir"}


def _line_of(text: str | None, section: str | None, key: str | None) -> int | None:
    """Line number (1-based) of ``key`` inside ``section`` in the raw JSON text."""
    if not text:
        return None
    lines = text.splitlines()
    start = 0
    if section is not None:
        pat = re.compile(rf'"{re.escape(section)}"\s*:')
        hit = next((i for i, ln in enumerate(lines) if pat.search(ln)), None)
        if hit is None:
            return None
        start = hit
        if key is None:
            return hit + 1
    if key is None:
        return None
    pat = re.compile(rf'"{re.escape(key)}"\s*:')
    hit = next((i for i in range(start, len(lines)) if pat.search(lines[i])), None)
    return None if hit is None else hit + 1


def _fail(source: str, text: str | None, section: str | None, key: str | None, message: str):
    line = _line_of(text, section, key)
    where = f"{source}:{line}" if line else source
    raise ConfigError(f"{where}: {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    waveform: WaveformSection = field(default_factory=WaveformSection)
    doppler: DopplerSection = field(default_factory=DopplerSection)
    loss: LossSection = field(default_factory=LossSection)
    constraint: ConstraintSection = field(default_factory=ConstraintSection)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    baselines: BaselineSection = field(default_factory=BaselineSection)
    pareto: ParetoSection = field(default_factory=ParetoSection)
    seed: int = 0
    output_dir: str = "out"

    # -- construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict, source: str = "<config>", text: str | None = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            _fail(source, text, None, None, "top level must be a JSON object")
        kwargs = {}
        for key, value in data.items():
            if key in _TOP_LEVEL:
                kwargs[key] = value
                continue
            if key not in _SECTIONS:
                _fail(source, text, None, key, f"unknown key {key!r}")
            if not isinstance(value, dict):
                _fail(source, text, None, key, f"section {key!r} must be an object")
            sec_cls = _SECTIONS[key]
            known = {f.name: f for f in dataclasses.fields(sec_cls)}
            sec_kwargs = {}
            for k, v in value.items():
                if k not in known:
                    _fail(source, text, key, k, f"unknown key {key}.{k}")
                if isinstance(v, list):
                    v = tuple(v)
                sec_kwargs[k] = v
            kwargs[key] = sec_cls(**sec_kwargs)
        cfg = cls(**kwargs)
        cfg.validate(source, text)
        return cfg

    @classmethod
    def loads(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        return cls.from_dict(data, source, text)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
        return cls.loads(text, str(path))

    @classmethod
    def default(cls) -> "ExperimentConfig":
        text = resources.files("gofdm").joinpath("data", DEFAULT_CONFIG).read_text()
        return cls.loads(text, DEFAULT_CONFIG)

    def to_dict(self) -> dict:
        out = {}
        for name in _SECTIONS:
            sec = dataclasses.asdict(getattr(self, name))
            out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in sec.items()}
        out["seed"] = self.seed
        out["output_dir"] = self.output_dir
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -- validation ---------------------------------------------------------

    def validate(self, source: str = "<config>", text: str | None = None) -> None:
        checks = [
            ("waveform", None, self.params),
            ("doppler", None, self.grid),
            ("loss", None, self.loss_config),
            ("constraint", None, self.constraint_mode),
            ("waveform", "kind", self.preprocessors),
        ]
        for section, key, build in checks:
            try:
                build()
            except (ConfigError, TypeError) as exc:
                _fail(source, text, section, key, str(exc))
        try:
            self.grid().check(self.params())
        except ConfigError as exc:
            _fail(source, text, "doppler", None, str(exc))
        if not isinstance(self.seed, int) or self.seed < 0:
            _fail(source, text, None, "seed", f"seed must be a non-negative integer, got {self.seed!r}")
        opt = self.optimizer
        if not isinstance(opt.T, int) or opt.T < 1:
            _fail(source, text, "optimizer", "T", f"T must be a positive integer, got {opt.T!r}")
        if opt.eta <= 0:
            _fail(source, text, "optimizer", "eta", f"eta must be positive, got {opt.eta}")
        if not (0 <= opt.rho1 < 1 and 0 <= opt.rho2 < 1) or opt.eps <= 0:
            _fail(source, text, "optimizer", None, "need 0 <= rho1, rho2 < 1 and eps > 0")
        if opt.fdss_map not in ("abs", "signed"):
            _fail(source, text, "optimizer", "fdss_map", f"fdss_map must be 'abs' or 'signed', got {opt.fdss_map!r}")
        if opt.init != "random" and opt.init not in SCHEMES:
            _fail(source, text, "optimizer", "init", f"init must be 'random' or a baseline scheme, got {opt.init!r}")
        for name in self.baselines.schemes:
            if name not in SCHEMES:
                _fail(source, text, "baselines", "schemes", f"unknown baseline scheme {name!r}")
        if not 0 <= self.baselines.roll_off <= 1:
            _fail(source, text, "baselines", "roll_off", "roll_off must lie in [0, 1]")
        par = self.pareto
        if not par.omega1_grid or not par.p_th_grid:
            _fail(source, text, "pareto", None, "sweep grids must be nonempty")
        if any(not 0 <= w <= 1 for w in par.omega1_grid):
            _fail(source, text, "pareto", "omega1_grid", "omega1 values must lie in [0, 1]")
        if par.restarts < 1 or par.T < 1 or par.eta <= 0:
            _fail(source, text, "pareto", None, "restarts and T must be >= 1 and eta > 0")

    # -- derived objects ----------------------------------------------------

    def params(self) -> WaveformParams:
        w = self.waveform
        return WaveformParams(M=w.M, K=w.K, N=w.N, D=w.D, alpha=float(w.alpha), beta=float(w.beta),
                              delta_f=float(w.delta_f), n_cp=w.n_cp)

    def grid(self) -> DopplerGrid:
        return DopplerGrid(float(self.doppler.f_D), self.doppler.J)

    def loss_config(self) -> LossConfig:
        return LossConfig(grid=self.grid(), **dataclasses.asdict(self.loss))

    def constraint_mode(self) -> ConstraintMode:
        c = self.constraint
        return ConstraintMode(c.mode, c.B_phases, None, c.circular)

    def preprocessors(self) -> list[tuple[str, Preprocessor]]:
        """``(label, preprocessor)`` for every candidate pairing to optimize."""
        params = self.params()
        kinds_A = self.optimizer.candidates_A or (self.waveform.kind,)
        kinds_B = self.optimizer.candidates_B or (self.waveform.kind,)
        out = []
        for ka in kinds_A:
            for kb in kinds_B:
                if ka == kb:
                    out.append((_label(ka), build_preprocessor(ka, params)))
                else:
                    A = build_preprocessor(ka, params).A
                    B = build_preprocessor(kb, params).B
                    out.append((f"{_label(ka)}_A+{_label(kb)}_B", Preprocessor.custom(A, B)))
        return out


def _label(kind: str) -> str:
    return kind.strip().lower().replace(" ", "-")
