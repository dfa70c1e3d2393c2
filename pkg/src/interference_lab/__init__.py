"""Concurrent bandit variants under pooled or siloed training data."""

__version__ = "0.1.0"

from ._jit import backend
from .config import dump_config, load_config, paper_preset, parse_config
from .environment import Environment, instant_regret, make_uniform_env, pull
from .errors import ConfigError, DomainError
from .harness import (
    ExperimentConfig,
    Regime,
    TrajectoryLog,
    first_divergence,
    run_experiment,
    run_replication,
    solo_replay,
)
from .policies import (
    ActionChoice,
    ArmStats,
    PolicyKind,
    PolicySpec,
    StatsView,
    map_estimate,
    mle_estimate,
    select_action,
    update,
)
from .stats import (
    AteReport,
    RegretSummary,
    estimate_ate,
    interference_bias_report,
    rank_variants,
    summarize_regret,
)

__all__ = [
    "__version__",
    "backend",
    "dump_config",
    "load_config",
    "paper_preset",
    "parse_config",
    "Environment",
    "instant_regret",
    "make_uniform_env",
    "pull",
    "ConfigError",
    "DomainError",
    "ExperimentConfig",
    "Regime",
    "TrajectoryLog",
    "first_divergence",
    "run_experiment",
    "run_replication",
    "solo_replay",
    "ActionChoice",
    "ArmStats",
    "PolicyKind",
    "PolicySpec",
    "StatsView",
    "map_estimate",
    "mle_estimate",
    "select_action",
    "update",
    "AteReport",
    "RegretSummary",
    "estimate_ate",
    "interference_bias_report",
    "rank_variants",
    "summarize_regret",
]
