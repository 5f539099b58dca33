"""Opportunistic Large Array broadcast: analytics, optimization, simulation."""

__version__ = "0.1.0"

from .continuum import (
    BroadcastDied,
    ContinuumParams,
    InfeasibleError,
    RingSequence,
    aggregate_path_loss,
    basic_ola_max_decode_threshold,
    broadcast_sustains,
    closed_form_ring,
    epsilon_min,
    fes,
    mrtt_curve,
    next_ring,
    propagate,
)
from .discretesim import (
    ChannelModel,
    NodeField,
    PsbEstimate,
    TrialConfig,
    TrialResult,
    estimate_psb,
    generate_network,
    psb_sweep,
    received_power_deterministic,
    received_power_fading,
    run_trial,
)
from .units import RadioParams, decoding_ratio, nearest_neighbor_distance
from .varthresh import (
    ConstraintSpec,
    EpsilonSchedule,
    NoFeasibleSolutionError,
    OptimizationResult,
    OptimizerConfig,
    double_difference,
    evaluate,
    fes_profile,
    optimize,
)

__all__ = [
    "__version__",
    "BroadcastDied",
    "ContinuumParams",
    "InfeasibleError",
    "RingSequence",
    "aggregate_path_loss",
    "basic_ola_max_decode_threshold",
    "broadcast_sustains",
    "closed_form_ring",
    "epsilon_min",
    "fes",
    "mrtt_curve",
    "next_ring",
    "propagate",
    "ChannelModel",
    "NodeField",
    "PsbEstimate",
    "TrialConfig",
    "TrialResult",
    "estimate_psb",
    "generate_network",
    "psb_sweep",
    "received_power_deterministic",
    "received_power_fading",
    "run_trial",
    "RadioParams",
    "decoding_ratio",
    "nearest_neighbor_distance",
    "ConstraintSpec",
    "EpsilonSchedule",
    "NoFeasibleSolutionError",
    "OptimizationResult",
    "OptimizerConfig",
    "double_difference",
    "evaluate",
    "fes_profile",
    "optimize",
]
