"""Exact brute-force references for the sampling mechanism.

Everything here is slow-by-design ground truth: the closed-form target
distribution, the exact finite-M induced distribution by enumerating ordered
candidate tuples, its Monte Carlo twin, the misreport audit, and a finite
difference check that the allocation is the gradient of the truthful utility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import _kernels, seeds
from .allocation import sample_candidates, sample_indices, softmax
from .errors import (
    AbsoluteContinuityViolationError,
    EnumerationTooLargeError,
    SpaceMismatchError,
)
from .payments import BetaVector, beta_minus_i, offset_c, rochet_payment, truthful_utility
from .policy import Policy, RewardFunction

ENUMERATION_CAP = 1 << 20
AUDIT_TOLERANCE = 1e-9

PAYMENT_RULE_ROCHET = "rochet"
PAYMENT_RULE_DOUBLE_OFFSET = "double_offset"
# Negative control: the expected-value leg of the payment is computed from the
# advertiser's true rewards instead of her reported ones.  The resulting
# "utility" reduces to the potential of the reported vector alone, so any
# upward misreport gains and the audit must fail.
PAYMENT_RULE_VALUE_SUBSTITUTED = "value_substituted"


@dataclass(frozen=True, eq=False)
class OracleResult:
    distribution: Policy
    log_partition: float


@dataclass(frozen=True)
class AuditReport:
    best_misreport_gain: float
    worst_case_report: str
    passed: bool


def optimal_distribution(
    ref: Policy, reports: list[RewardFunction], tau: float
) -> OracleResult:
    """Closed-form maximizer: proportional to pi_ref(y) * exp(sum_i r_i(y)/tau)."""
    for r in reports:
        if r.space != ref.space:
            raise SpaceMismatchError("reward function lives on a different space than the reference")
    log_w = ref.log_probs.copy()
    for r in reports:
        log_w = log_w + r.rewards / tau
    log_z = float(logsumexp(log_w))
    return OracleResult(
        distribution=Policy(ref.space, log_w - log_z),
        log_partition=log_z,
    )


def _logit_table(instance) -> np.ndarray:
    """Per-reply slot logit r(y)/tau + log pi_ref(y) - log pi_gen(y).

    Replies outside the proposal's support get -inf (they are never sampled);
    a reply inside the proposal's support but outside the reference's support
    makes the mechanism ill-defined and is rejected.
    """
    gen_support = instance.gen.log_probs > -np.inf
    if np.any(gen_support & (instance.ref.log_probs == -np.inf)):
        raise AbsoluteContinuityViolationError(
            "proposal places mass on replies outside the reference support"
        )
    agg = np.zeros(instance.space.size)
    for r in instance.reports:
        agg += r.rewards
    with np.errstate(invalid="ignore"):
        table = agg / instance.config.tau + instance.ref.log_probs - instance.gen.log_probs
    table[~gen_support] = -np.inf
    return table


def _weight_table(instance) -> np.ndarray:
    """exp of the logit table, max-subtracted over the proposal's support."""
    table = _logit_table(instance)
    finite = table[table > -np.inf]
    w = np.exp(table - finite.max())
    w[table == -np.inf] = 0.0
    return w


def induced_distribution_exact(instance, m: int) -> Policy:
    """Exact induced reply distribution at candidate count m.

    Sums over every ordered tuple in Y^m (candidates are i.i.d. ordered
    draws), weighting each tuple by its proposal probability and adding the
    in-tuple softmax mass to each slot's reply.  Capped at K^m <= 2^20.
    """
    k = instance.space.size
    if k**m > ENUMERATION_CAP:
        raise EnumerationTooLargeError(
            f"K^m = {k}^{m} exceeds the {ENUMERATION_CAP} tuple enumeration cap"
        )
    probs = _kernels.induced_exact(instance.gen.probs(), _weight_table(instance), m)
    with np.errstate(divide="ignore"):
        return Policy(instance.space, np.log(probs) - np.log(probs.sum()))


def _candidate_matrix(instance, m: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    return sample_indices(instance.gen, rng, (trials, m))


def induced_distribution_mc(
    instance, m: int, trials: int, rng: np.random.Generator | None = None
) -> Policy:
    """Empirical distribution of the mechanism's returned reply over many runs.

    Each trial replays the allocation exactly: m inverse-CDF candidate draws,
    slot softmax, one inverse-CDF final draw.  Two substreams are spawned from
    rng so the final-draw stream does not depend on m.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if rng is None:
        rng = seeds.substream(instance.config.seed, seeds.PHASE_CANDIDATES)
    cand_rng, final_rng = rng.spawn(2)
    cand = _candidate_matrix(instance, m, trials, cand_rng)
    table = _logit_table(instance)
    chosen = _kernels.run_trials(cand, table, final_rng.random(trials))
    counts = np.bincount(chosen, minlength=instance.space.size).astype(np.float64)
    with np.errstate(divide="ignore"):
        return Policy(instance.space, np.log(counts) - np.log(counts.sum()))


def default_misreport_grid(r_on_batch: np.ndarray) -> list[tuple[str, np.ndarray]]:
    """Adversarial grid: scalar scalings, per-slot nudges, and the zero report."""
    r = np.asarray(r_on_batch, dtype=np.float64)
    grid: list[tuple[str, np.ndarray]] = []
    for scale in (0.0, 0.5, 0.9, 1.1, 2.0):
        grid.append((f"scale={scale}", scale * r))
    for j in range(r.shape[0]):
        for delta in (0.1, -0.1, 1.0, -1.0):
            bumped = r.copy()
            bumped[j] += delta
            grid.append((f"slot[{j}]{delta:+g}", bumped))
    grid.append(("zero", np.zeros_like(r)))
    return grid


def _misreport_utility(
    r_true: np.ndarray,
    r_hat: np.ndarray,
    beta: BetaVector,
    tau: float,
    c: float,
    payment_rule: str,
) -> float:
    """Advertiser's expected utility when reporting r_hat under a payment rule."""
    dist = softmax(r_hat / tau + beta.values)
    if payment_rule == PAYMENT_RULE_ROCHET:
        payment = rochet_payment(r_hat, dist, beta, tau, c)
    elif payment_rule == PAYMENT_RULE_DOUBLE_OFFSET:
        payment = rochet_payment(r_hat, dist, beta, tau, 2.0 * c)
    elif payment_rule == PAYMENT_RULE_VALUE_SUBSTITUTED:
        # only the expected-value leg is corrupted; the potential leg still
        # uses the report, so inflating it is pure gain
        from scipy.special import logsumexp

        payment = float(dist @ r_true - tau * logsumexp(r_hat / tau + beta.values) - c)
    else:
        raise ValueError(f"unknown payment rule {payment_rule!r}")
    return float(dist @ r_true - payment)


def deviation_audit(
    instance,
    i: int,
    grid=None,
    batches: int = 1,
    rng: np.random.Generator | None = None,
    payment_rule: str = PAYMENT_RULE_ROCHET,
    tolerance: float = AUDIT_TOLERANCE,
) -> AuditReport:
    """Compare truthful utility against every grid misreport on sampled batches.

    The candidate set is held fixed per batch; the expectation is over the
    final draw only, which is exactly the regime in which truthfulness is
    dominant.  ``grid`` maps the truthful batch-restricted reward vector to a
    list of (label, misreport vector) pairs and defaults to
    default_misreport_grid.  Reports the largest gain any misreport achieved.
    """
    if rng is None:
        rng = seeds.substream(instance.config.seed, seeds.PHASE_CANDIDATES, 99)
    grid = grid if grid is not None else default_misreport_grid
    best_gain = -np.inf
    worst = "truthful"
    for _ in range(batches):
        batch = sample_candidates(instance.gen, instance.ref, instance.config, rng)
        r_true = instance.reports[i].rewards[batch.indices]
        beta = beta_minus_i(instance.reports, batch, i, instance.config.tau)
        c = offset_c(beta, instance.config.tau)
        u_truthful = _misreport_utility(
            r_true, r_true, beta, instance.config.tau, c, payment_rule
        )
        for label, r_hat in grid(r_true):
            gain = (
                _misreport_utility(r_true, r_hat, beta, instance.config.tau, c, payment_rule)
                - u_truthful
            )
            if gain > best_gain:
                best_gain = gain
                worst = label
    return AuditReport(
        best_misreport_gain=float(best_gain),
        worst_case_report=worst,
        passed=bool(best_gain <= tolerance),
    )


def finite_difference_gradient_check(
    r_on_batch: np.ndarray, beta: BetaVector, tau: float, h: float = 1e-5
) -> float:
    """Max |central difference of the truthful utility - slot probability|."""
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    r = np.asarray(r_on_batch, dtype=np.float64)
    dist = softmax(r / tau + beta.values)
    worst = 0.0
    for j in range(r.shape[0]):
        up = r.copy()
        up[j] += h
        down = r.copy()
        down[j] -= h
        grad = (
            truthful_utility(up, beta, tau, 0.0) - truthful_utility(down, beta, tau, 0.0)
        ) / (2 * h)
        worst = max(worst, abs(grad - dist[j]))
    return worst


def batch_tv_samples(
    instance, m: int, trials: int, rng: np.random.Generator
) -> np.ndarray:
    """TV between each sampled batch's self-normalized reply mass and the target.

    This is the random per-batch estimate whose deviation shrinks like
    1/sqrt(m); averaging it over trials gives the rate-check curve.
    """
    opt = optimal_distribution(instance.ref, instance.reports, instance.config.tau)
    cand = _candidate_matrix(instance, m, trials, rng)
    return _kernels.batch_tv(cand, _weight_table(instance), opt.distribution.probs())
