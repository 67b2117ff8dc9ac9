"""Exact stationary analysis of batch-arrival multiserver queues with setup times."""

from .model import (
    BadBatchError,
    BatchDistribution,
    ConfigError,
    CostRates,
    ModelError,
    ModelParams,
    NonPositiveRateError,
    SetupPolicy,
    UnstableError,
    params_from_config,
    validate_params,
)
from .roots import (
    LevelPolynomial,
    NoSignChangeError,
    WrongBatchKindError,
    find_all_roots,
    find_root,
    single_arrival_root,
    tail_decay_rate,
)
from .solver import (
    JointDistribution,
    NumericalBreakdownError,
    SolvedModel,
    TruncationTooSmallError,
    boundary_probabilities,
    default_truncation,
    joint_distribution,
    level0_gf,
    solve,
)
from .moments import (
    MomentTable,
    interior_first_moment,
    interior_higher_moment,
    level0_moments,
    mean_queue_length,
    moment_table,
    top_moment,
)
from .oracle import (
    SingularSystemError,
    TruncatedChain,
    build_onidle_chain,
    build_setup_chain,
    erlang_c,
    onidle_mean_queue,
    reference_rows,
    setup_rows,
    stationary,
)
from .measures import (
    PerformanceReport,
    PositionDistribution,
    batch_position_probabilities,
    build_report,
    conventional_waiting_coefficients,
    cost_functions,
    decomposition_gap,
    mean_setup_servers,
    mean_wait,
    position_distribution,
    power_on_idle,
    power_on_off,
    setup_probability,
)

__version__ = "0.1.0"

__all__ = [
    "BadBatchError",
    "BatchDistribution",
    "ConfigError",
    "CostRates",
    "ModelError",
    "ModelParams",
    "NonPositiveRateError",
    "SetupPolicy",
    "UnstableError",
    "params_from_config",
    "validate_params",
    "LevelPolynomial",
    "NoSignChangeError",
    "WrongBatchKindError",
    "find_all_roots",
    "find_root",
    "single_arrival_root",
    "tail_decay_rate",
    "JointDistribution",
    "NumericalBreakdownError",
    "SolvedModel",
    "TruncationTooSmallError",
    "boundary_probabilities",
    "default_truncation",
    "joint_distribution",
    "level0_gf",
    "solve",
    "MomentTable",
    "interior_first_moment",
    "interior_higher_moment",
    "level0_moments",
    "mean_queue_length",
    "moment_table",
    "top_moment",
    "SingularSystemError",
    "TruncatedChain",
    "build_onidle_chain",
    "build_setup_chain",
    "erlang_c",
    "onidle_mean_queue",
    "reference_rows",
    "setup_rows",
    "stationary",
    "PerformanceReport",
    "PositionDistribution",
    "batch_position_probabilities",
    "build_report",
    "conventional_waiting_coefficients",
    "cost_functions",
    "decomposition_gap",
    "mean_setup_servers",
    "mean_wait",
    "position_distribution",
    "power_on_idle",
    "power_on_off",
    "setup_probability",
]
