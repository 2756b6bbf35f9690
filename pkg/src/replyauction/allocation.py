"""Candidate sampling and the importance-corrected softmax allocation.

The pipeline: draw M i.i.d. candidates from the proposal policy, sum the
reported rewards per candidate, correct each slot by the log ratio of
reference to proposal probability, and sample the returned reply from the
softmax over slots.  Duplicate candidates keep their own slots and weights;
merging them would change the estimator.

All functions are pure; slot scoring is safe to parallelize, with only the
final draw serialized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import seeds
from .errors import (
    AbsoluteContinuityViolationError,
    NonFiniteLogitError,
    SpaceMismatchError,
)
from .policy import Policy, RewardFunction
from .space import OutcomeSpace, Reply

if TYPE_CHECKING:  # circular at runtime: payments builds on CandidateBatch
    from .instances import Instance
    from .payments import MechanismOutcome


@dataclass(frozen=True)
class MechanismConfig:
    """Reference weight tau, candidate count m, and the run seed."""

    tau: float
    m: int
    seed: int

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")


@dataclass(frozen=True, eq=False)
class CandidateBatch:
    """M sampled candidates with their cached proposal and reference log-probs."""

    space: OutcomeSpace
    candidates: tuple[Reply, ...]
    log_gen: np.ndarray
    log_ref: np.ndarray

    def __post_init__(self) -> None:
        m = len(self.candidates)
        if m < 1:
            raise ValueError("candidate batch must contain at least one reply")
        lg = np.asarray(self.log_gen, dtype=np.float64)
        lr = np.asarray(self.log_ref, dtype=np.float64)
        if lg.shape != (m,) or lr.shape != (m,):
            raise ValueError("log_gen and log_ref must both have one entry per candidate")
        if not np.all(np.isfinite(lg)):
            raise AbsoluteContinuityViolationError(
                "candidate with non-finite proposal log-probability"
            )
        if not np.all(np.isfinite(lr)):
            raise AbsoluteContinuityViolationError(
                "sampled a candidate the reference policy assigns zero probability"
            )
        object.__setattr__(self, "log_gen", lg)
        object.__setattr__(self, "log_ref", lr)

    @property
    def m(self) -> int:
        return len(self.candidates)

    @property
    def indices(self) -> np.ndarray:
        return np.array([c.index for c in self.candidates], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class AllocationResult:
    """Softmax distribution over candidate slots and the sampled slot."""

    logits: np.ndarray
    distribution: np.ndarray
    chosen_slot: int
    chosen_reply: Reply


def sample_indices(policy: Policy, rng: np.random.Generator, shape) -> np.ndarray:
    """Inverse-CDF draws of reply indices; zero-probability replies never appear."""
    cdf = np.cumsum(policy.probs())
    support = np.flatnonzero(policy.probs() > 0)
    idx = np.searchsorted(cdf, rng.random(shape), side="right")
    # idx can land one past the support only when u rounds up to the CDF total
    return np.minimum(idx, support[-1])


def sample_candidates(
    gen: Policy, ref: Policy, config: MechanismConfig, rng: np.random.Generator
) -> CandidateBatch:
    """Draw config.m i.i.d. candidates from gen, recording both log-probs.

    A sampled reply with zero reference probability raises
    AbsoluteContinuityViolationError: it would carry a -inf logit, which
    signals a misconfigured instance rather than something to clamp.
    """
    if gen.space != ref.space:
        raise SpaceMismatchError("proposal and reference policies live on different spaces")
    draws = sample_indices(gen, rng, config.m)
    candidates = tuple(gen.space.replies[i] for i in draws)
    return CandidateBatch(
        space=gen.space,
        candidates=candidates,
        log_gen=gen.log_probs[draws],
        log_ref=ref.log_probs[draws],
    )


def aggregate_rewards(reports: list[RewardFunction], batch: CandidateBatch) -> np.ndarray:
    """Per-slot sum of the reported rewards; an empty report list sums to zero."""
    for r in reports:
        if r.space != batch.space:
            raise SpaceMismatchError("reward function lives on a different space than the batch")
    agg = np.zeros(batch.m)
    idx = batch.indices
    for r in reports:
        agg += r.rewards[idx]
    return agg


def allocation_logits(agg: np.ndarray, batch: CandidateBatch, tau: float) -> np.ndarray:
    """Slot logits: agg_j / tau + log pi_ref(y_j) - log pi_gen(y_j)."""
    agg = np.asarray(agg, dtype=np.float64)
    if agg.shape != (batch.m,):
        raise ValueError(f"expected {batch.m} aggregate rewards, got shape {agg.shape}")
    return agg / tau + batch.log_ref - batch.log_gen


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax; the single normalization point for slot weights."""
    w = np.exp(logits - logits.max())
    return w / w.sum()


def allocate(
    logits: np.ndarray, rng: np.random.Generator, replies: tuple[Reply, ...] | None = None
) -> AllocationResult:
    """Sample a slot from softmax(logits) by inverse CDF over ascending slot index."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.shape[0] < 1:
        raise ValueError("logits must be a nonempty vector")
    if not np.all(np.isfinite(logits)):
        raise NonFiniteLogitError("allocation logits must all be finite")
    w = np.exp(logits - logits.max())
    cum = np.cumsum(w)
    threshold = rng.random() * cum[-1]
    slot = int(min(np.searchsorted(cum, threshold, side="right"), logits.shape[0] - 1))
    distribution = w / cum[-1]
    chosen = replies[slot] if replies is not None else Reply(slot)
    return AllocationResult(
        logits=logits, distribution=distribution, chosen_slot=slot, chosen_reply=chosen
    )


def run_mechanism(
    instance: "Instance",
    config: MechanismConfig | None = None,
    *,
    payment_variant: str = "offset",
    candidate_rng: np.random.Generator | None = None,
    final_rng: np.random.Generator | None = None,
) -> "MechanismOutcome":
    """One end-to-end auction: candidates, allocation, final draw, payments.

    Randomness comes from two named substreams of config.seed (candidate
    sampling and final draw), so the same (instance, config, seed) always
    reproduces the same outcome and changing m leaves the final-draw stream
    untouched.
    """
    from .payments import settle  # local import to avoid a module cycle

    if config is None:
        config = instance.config
    if candidate_rng is None:
        candidate_rng = seeds.substream(config.seed, seeds.PHASE_CANDIDATES)
    if final_rng is None:
        final_rng = seeds.substream(config.seed, seeds.PHASE_FINAL_DRAW)

    batch = sample_candidates(instance.gen, instance.ref, config, candidate_rng)
    agg = aggregate_rewards(instance.reports, batch)
    logits = allocation_logits(agg, batch, config.tau)
    allocation = allocate(logits, final_rng, replies=batch.candidates)
    return settle(instance.reports, batch, allocation, config.tau, variant=payment_variant)
