"""Strategyproof auction engine over finite reply spaces.

Samples candidate replies from a proposal policy, reweights them by reported
rewards and an importance correction so the returned reply converges to the
KL-regularized optimum, and charges payments that make truthful reporting a
dominant strategy.  Brute-force oracles verify every property at desk scale.
"""

from ._kernels import ACTIVE_BACKEND
from .allocation import (
    AllocationResult,
    CandidateBatch,
    MechanismConfig,
    aggregate_rewards,
    allocate,
    allocation_logits,
    run_mechanism,
    sample_candidates,
    softmax,
)
from .diagnostics import (
    DiagnosticsReport,
    expected_reward,
    is_variance_closed_form,
    is_variance_empirical,
    normalized_reward,
    pearson,
    sample_complexity_bound,
    tv_distance,
)
from .instances import Instance, InstanceSpec, generate, load_instance, save_instance
from .oracle import (
    AuditReport,
    OracleResult,
    deviation_audit,
    finite_difference_gradient_check,
    induced_distribution_exact,
    induced_distribution_mc,
    optimal_distribution,
)
from .payments import (
    BetaVector,
    MechanismOutcome,
    PaymentTerms,
    aligned_utility,
    beta_minus_i,
    offset_c,
    rochet_payment,
    settle,
    truthful_utility,
)
from .policy import (
    DpoParams,
    Policy,
    RewardFunction,
    dpo_reward,
    log_density,
    policy_from_weights,
    synthetic_context_tilt,
)
from .space import OutcomeSpace, Query, Reply, validate_space

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_BACKEND",
    "AllocationResult",
    "AuditReport",
    "BetaVector",
    "CandidateBatch",
    "DiagnosticsReport",
    "DpoParams",
    "Instance",
    "InstanceSpec",
    "MechanismConfig",
    "MechanismOutcome",
    "OracleResult",
    "OutcomeSpace",
    "PaymentTerms",
    "Policy",
    "Query",
    "Reply",
    "RewardFunction",
    "aggregate_rewards",
    "aligned_utility",
    "allocate",
    "allocation_logits",
    "beta_minus_i",
    "deviation_audit",
    "dpo_reward",
    "expected_reward",
    "finite_difference_gradient_check",
    "generate",
    "induced_distribution_exact",
    "induced_distribution_mc",
    "is_variance_closed_form",
    "is_variance_empirical",
    "load_instance",
    "log_density",
    "normalized_reward",
    "offset_c",
    "optimal_distribution",
    "pearson",
    "policy_from_weights",
    "rochet_payment",
    "run_mechanism",
    "sample_candidates",
    "sample_complexity_bound",
    "save_instance",
    "settle",
    "softmax",
    "synthetic_context_tilt",
    "truthful_utility",
    "tv_distance",
    "validate_space",
]
