"""Categorical policies over an outcome space, and per-reply reward functions.

All probability arithmetic is done in the log domain with log-sum-exp
stabilization; probabilities are materialized only at API boundaries.
Zero-probability replies are represented as -inf log-probability, and any
operation that would produce a non-finite reward fails loudly instead of
clamping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    AllZeroWeightsError,
    IndexOutOfRangeError,
    InfiniteRewardError,
    NegativeWeightError,
    SpaceMismatchError,
)
from .space import OutcomeSpace, Reply

NORMALIZATION_ATOL = 1e-9


def _frozen(values: np.ndarray) -> np.ndarray:
    out = np.asarray(values, dtype=np.float64).copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Policy:
    """Normalized categorical distribution over an outcome space."""

    space: OutcomeSpace
    log_probs: np.ndarray

    def __post_init__(self) -> None:
        lp = _frozen(self.log_probs)
        if lp.shape != (self.space.size,):
            raise SpaceMismatchError(
                f"log_probs has shape {lp.shape}, space has size {self.space.size}"
            )
        if np.any(np.isnan(lp)) or np.any(lp == np.inf):
            raise ValueError("log probabilities must be finite or -inf")
        if not np.any(lp > -np.inf):
            raise AllZeroWeightsError("policy must place mass on at least one reply")
        total = logsumexp(lp)
        if abs(total) > NORMALIZATION_ATOL:
            raise ValueError(f"log probabilities are not normalized (logsumexp={total})")
        object.__setattr__(self, "log_probs", lp)

    @classmethod
    def from_log_weights(cls, space: OutcomeSpace, log_weights: np.ndarray) -> "Policy":
        lw = np.asarray(log_weights, dtype=np.float64)
        return cls(space, lw - logsumexp(lw))

    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def log_density(self, y: Reply) -> float:
        """Log probability of one reply; the reply must belong to the space."""
        if not 0 <= y.index < self.space.size:
            raise IndexOutOfRangeError(f"reply index {y.index} outside space of size {self.space.size}")
        return float(self.log_probs[y.index])


@dataclass(frozen=True, eq=False)
class RewardFunction:
    """One advertiser's per-reply reward vector (same scale as tau)."""

    space: OutcomeSpace
    rewards: np.ndarray

    def __post_init__(self) -> None:
        r = _frozen(self.rewards)
        if r.shape != (self.space.size,):
            raise SpaceMismatchError(
                f"rewards has shape {r.shape}, space has size {self.space.size}"
            )
        if not np.all(np.isfinite(r)):
            raise InfiniteRewardError("reward entries must all be finite")
        object.__setattr__(self, "rewards", r)


@dataclass(frozen=True)
class DpoParams:
    """Regularization weight and prompt-dependent constant of one advertiser."""

    tau_i: float = 1.0
    log_z_i: float = 0.0

    def __post_init__(self) -> None:
        if not self.tau_i > 0:
            raise ValueError(f"tau_i must be positive, got {self.tau_i}")
        if not np.isfinite(self.log_z_i):
            raise ValueError("log_z_i must be finite")


def policy_from_weights(space: OutcomeSpace, weights) -> Policy:
    """Normalize nonnegative weights into a policy; zeros become -inf log-probs."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (space.size,):
        raise SpaceMismatchError(f"weights has shape {w.shape}, space has size {space.size}")
    if np.any(w < 0) or np.any(np.isnan(w)):
        raise NegativeWeightError("weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise AllZeroWeightsError("at least one weight must be positive")
    with np.errstate(divide="ignore"):
        return Policy(space, np.log(w) - np.log(total))


def dpo_reward(policy_i: Policy, policy_ref: Policy, params: DpoParams) -> RewardFunction:
    """Implicit reward of an advertiser policy relative to the reference.

    rewards[y] = tau_i * (log pi_i(y) - log pi_ref(y)) + log_z_i, which must be
    finite for every reply; mismatched supports are rejected.
    """
    if policy_i.space != policy_ref.space:
        raise SpaceMismatchError("advertiser and reference policies live on different spaces")
    rewards = params.tau_i * (policy_i.log_probs - policy_ref.log_probs) + params.log_z_i
    if not np.all(np.isfinite(rewards)):
        bad = np.flatnonzero(~np.isfinite(rewards))
        raise InfiniteRewardError(
            f"non-finite reward at replies {bad.tolist()}; supports of the two policies differ"
        )
    return RewardFunction(policy_i.space, rewards)


def synthetic_context_tilt(
    policy_ref: Policy, rewards: list[RewardFunction], strength: float
) -> Policy:
    """Exponentially tilt the reference toward the aggregate reward.

    Returns the policy proportional to pi_ref(y) * exp(strength * sum_i r_i(y)).
    This is the synthetic stand-in for a context-conditioned proposal model;
    strength 0 returns the reference unchanged.
    """
    if strength < 0:
        raise ValueError(f"tilt strength must be nonnegative, got {strength}")
    for r in rewards:
        if r.space != policy_ref.space:
            raise SpaceMismatchError("reward function lives on a different space than the reference")
    if strength == 0 or not rewards:
        return policy_ref
    agg = np.sum([r.rewards for r in rewards], axis=0)
    return Policy.from_log_weights(policy_ref.space, policy_ref.log_probs + strength * agg)


def log_density(policy: Policy, y: Reply) -> float:
    return policy.log_density(y)
