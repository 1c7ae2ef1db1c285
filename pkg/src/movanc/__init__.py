"""Power-constrained active noise control simulation."""

from .controller import ControllerState, Variant
from .engine import MetricsLog, StageSummary, run_scenario, run_suite
from .errors import (
    ConvergenceError,
    CorruptSignalError,
    DivergenceError,
    InsufficientRecordingError,
    InvalidBandError,
    MovancError,
    RecordingError,
    ScenarioError,
    SingularSystemError,
)
from .estimators import AdaptiveNoiseController, ConstrainedWienerFilter
from .io import emit_csv
from .noise import gen_bandlimited
from .oracle import constrained_solve, estimate_correlations, stage_oracles
from .penalty import PenaltyEstimator, offline_penalty
from .scenario import Scenario, parse_scenario_file, parse_scenario_text

__version__ = "0.1.0"
