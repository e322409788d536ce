"""Generalized OFDM waveforms, periodic ambiguity-function metrics and sequence optimization."""

__version__ = "0.1.0"

from .errors import ConfigError, DegenerateInputError, GofdmError, RankError
from .kernels import BACKEND
from .waveform import (
    WAVEFORM_KINDS,
    Preprocessor,
    SequenceGroupSet,
    WaveformParams,
    build_preprocessor,
    recover_sequences,
    synthesize_tf,
    tf_to_delay_time,
)
from .metrics import AfSurface, DopplerGrid, MetricsReport, evaluate
from .baselines import SCHEMES, baseline_scheme
from .optimizer import (
    AdamState,
    ConstraintMode,
    LossConfig,
    Problem,
    adam_step,
    gradient,
    loss,
    optimize,
    quantize_phases,
)
from .pareto import TradeoffPoint, pareto_filter, sweep, turning_point

__all__ = [
    "AdamState", "AfSurface", "BACKEND", "ConfigError", "ConstraintMode", "DegenerateInputError",
    "DopplerGrid", "GofdmError", "LossConfig", "MetricsReport", "Preprocessor", "Problem", "RankError",
    "SCHEMES", "SequenceGroupSet", "TradeoffPoint", "WAVEFORM_KINDS", "WaveformParams", "adam_step",
    "baseline_scheme", "build_preprocessor", "evaluate", "gradient", "loss", "optimize", "pareto_filter",
    "quantize_phases", "recover_sequences", "sweep", "synthesize_tf", "tf_to_delay_time", "turning_point",
]
