"""Strategyproof payments and per-advertiser settlement.

For one advertiser, holding the candidate batch and everyone else's reports
fixed, the slot logits split as r_i/tau + beta, where beta collects the other
advertisers' rewards and the reference/proposal correction and is independent
of advertiser i's report.  The truthful expected utility is the convex
potential tau * log sum_j exp(r_i_j/tau + beta_j) + C, whose gradient is the
allocation itself; charging expected value minus that potential makes
truthful reporting dominant for any C.

The shipped offset C = -tau * log sum_j exp(beta_j) additionally zeroes the
utility of an all-zero report, which aligns each advertiser's utility with
her contribution.  The C = 0 variant is kept only for comparison runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .allocation import AllocationResult, CandidateBatch, softmax
from .errors import IndexOutOfRangeError, LengthMismatchError, SpaceMismatchError
from .policy import RewardFunction

PAYMENT_VARIANTS = ("offset", "zero")


@dataclass(frozen=True, eq=False)
class BetaVector:
    """Per-slot logit contribution of everyone except one advertiser."""

    values: np.ndarray
    advertiser: int


@dataclass(frozen=True)
class PaymentTerms:
    offset_c: float
    payment: float
    expected_value: float
    expected_utility: float


@dataclass(frozen=True, eq=False)
class MechanismOutcome:
    batch: CandidateBatch
    allocation: AllocationResult
    per_advertiser: list[PaymentTerms]
    revenue: float

    @property
    def chosen_reply(self):
        return self.allocation.chosen_reply


def rewards_on_batch(report: RewardFunction, batch: CandidateBatch) -> np.ndarray:
    """Restrict a reward function to the batch's candidate slots."""
    if report.space != batch.space:
        raise SpaceMismatchError("reward function lives on a different space than the batch")
    return report.rewards[batch.indices]


def beta_minus_i(
    reports: list[RewardFunction], batch: CandidateBatch, i: int, tau: float
) -> BetaVector:
    """beta_j = sum_{k != i} r_k(y_j)/tau + log(pi_ref(y_j)/pi_gen(y_j))."""
    if not 0 <= i < len(reports):
        raise IndexOutOfRangeError(f"advertiser {i} out of range for {len(reports)} reports")
    values = batch.log_ref - batch.log_gen
    idx = batch.indices
    for k, r in enumerate(reports):
        if r.space != batch.space:
            raise SpaceMismatchError("reward function lives on a different space than the batch")
        if k != i:
            values = values + r.rewards[idx] / tau
    return BetaVector(values=values, advertiser=i)


def offset_c(beta: BetaVector, tau: float) -> float:
    """The aligning constant: minus the utility of an all-zero report."""
    return float(-tau * logsumexp(beta.values))


def truthful_utility(r_on_batch: np.ndarray, beta: BetaVector, tau: float, c: float) -> float:
    """Expected utility under truthful reporting: tau * LSE(r/tau + beta) + c."""
    r = np.asarray(r_on_batch, dtype=np.float64)
    if r.shape != beta.values.shape:
        raise LengthMismatchError(
            f"rewards ({r.shape}) and beta ({beta.values.shape}) differ in length"
        )
    return float(tau * logsumexp(r / tau + beta.values) + c)


def rochet_payment(
    r_on_batch: np.ndarray,
    allocation_distribution: np.ndarray,
    beta: BetaVector,
    tau: float,
    c: float,
) -> float:
    """Expected value under the allocation minus the truthful-utility potential."""
    r = np.asarray(r_on_batch, dtype=np.float64)
    dist = np.asarray(allocation_distribution, dtype=np.float64)
    if r.shape != beta.values.shape or dist.shape != beta.values.shape:
        raise LengthMismatchError("rewards, distribution and beta must share one length")
    return float(dist @ r - tau * logsumexp(r / tau + beta.values) - c)


def aligned_utility(r_on_batch: np.ndarray, beta: BetaVector, tau: float) -> float:
    """Utility written against the allocation the others would induce alone.

    tau * log sum_j exp(r_j/tau) * softmax(beta)_j; algebraically equal to
    truthful_utility with the aligning offset, an identity the tests assert
    rather than this function assuming it.
    """
    r = np.asarray(r_on_batch, dtype=np.float64)
    if r.shape != beta.values.shape:
        raise LengthMismatchError(
            f"rewards ({r.shape}) and beta ({beta.values.shape}) differ in length"
        )
    without_i = softmax(beta.values)
    with np.errstate(divide="ignore"):
        return float(tau * logsumexp(r / tau + np.log(without_i)))


def settle(
    reports: list[RewardFunction],
    batch: CandidateBatch,
    allocation: AllocationResult,
    tau: float,
    variant: str = "offset",
) -> MechanismOutcome:
    """Compute every advertiser's payment terms from the cached allocation.

    The allocation distribution is reused as-is for the expected-value terms;
    nothing is resampled or renormalized here.
    """
    if variant not in PAYMENT_VARIANTS:
        raise ValueError(f"payment variant must be one of {PAYMENT_VARIANTS}, got {variant!r}")
    terms = []
    for i, report in enumerate(reports):
        r = rewards_on_batch(report, batch)
        # beta comes from the cached allocation logits, not a recomputation,
        # so the settled terms and the allocation cannot drift apart.
        beta = BetaVector(values=allocation.logits - r / tau, advertiser=i)
        c = offset_c(beta, tau) if variant == "offset" else 0.0
        expected_value = float(allocation.distribution @ r)
        payment = rochet_payment(r, allocation.distribution, beta, tau, c)
        terms.append(
            PaymentTerms(
                offset_c=c,
                payment=payment,
                expected_value=expected_value,
                expected_utility=expected_value - payment,
            )
        )
    revenue = float(sum(t.payment for t in terms))
    return MechanismOutcome(
        batch=batch, allocation=allocation, per_advertiser=terms, revenue=revenue
    )
