"""Real-time remote tracking of a Markov source over a state-dependent erasure channel.

Closed-form analysis, Monte Carlo simulation, and sampling-budget
optimization for state-aware randomized sampling against periodic,
change-aware, and semantics-aware reference policies.
"""

from .model import (
    ChangeAwarePolicy,
    ChannelParams,
    CostWeights,
    DegenerateModelError,
    JointChain,
    JointStationary,
    ParameterError,
    PolicyKind,
    ReducibleChainError,
    RsPolicy,
    SemanticsAwarePolicy,
    SourceParams,
    SourceParams3,
    UniformPolicy,
    build_joint_chain_change_aware,
    build_joint_chain_rs,
    build_joint_chain_rs3,
    build_joint_chain_semantics_aware,
    compare_three_state_forms,
    stationary_change_aware,
    stationary_numeric,
    stationary_rs,
    stationary_semantics_aware,
    stationary_three_state,
    three_state_closed_form,
)
from .metrics import (
    ConsecErrorSpec,
    MetricReport,
    actuation_error_cost,
    avg_consecutive_error,
    avg_importance_consec,
    consec_error_pmf,
    consec_transition_prob,
    importance_pmf,
    importance_transition,
    metric_report,
    monotone_error_regions,
    reconstruction_error_rate,
    rs_beats_semantics,
    rs_vs_semantics_thresholds,
    violation_probability,
)
from .optimizer import (
    OptimizeResult,
    SolutionCase,
    grid_oracle,
    minimize_pe_constrained,
    monotonicity_conditions,
    objective,
    optimize_constrained,
    optimize_unconstrained,
    sampling_rate,
)
from .sim import SimConfig, SimReport, SlotContext, decide_sample, empirical_sampling_cost, simulate
from .tables import TABLE_IDS, build_table, importance_threshold_scan

__version__ = "0.1.0"
