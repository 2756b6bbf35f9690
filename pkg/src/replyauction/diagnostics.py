"""Estimator diagnostics and evaluation metrics.

The importance-sampling estimator under scrutiny is
mu_hat = (1/M) sum_j p*(y_j)^2 / q(y_j) with y_j ~ q, whose mean is
sum_y p*(y)^2 and whose variance has the closed form checked here against
simulation.  The rest are the sweep metrics: total variation, a conservative
sample-size bound for a target TV accuracy, the counterfactual-normalized
advertiser reward, and plain Pearson correlation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocation import sample_indices
from .errors import (
    DegenerateVarianceError,
    InstanceMismatchError,
    InvalidRangeError,
    SpaceMismatchError,
    SupportViolationError,
)
from .payments import MechanismOutcome, rewards_on_batch
from .policy import Policy


@dataclass(frozen=True)
class DiagnosticsReport:
    closed_form_variance: float
    empirical_variance: float
    tv_distance: float
    sample_complexity_m: int
    notes: str = ""


def is_variance_closed_form(opt: Policy, gen: Policy, m: int) -> float:
    """(1/M) * (sum_y p*(y)^4 / q(y) - (sum_y p*(y)^2)^2)."""
    if opt.space != gen.space:
        raise SpaceMismatchError("target and proposal policies live on different spaces")
    if m < 1:
        raise InvalidRangeError(f"m must be at least 1, got {m}")
    p = opt.probs()
    q = gen.probs()
    if np.any((p > 0) & (q == 0)):
        raise SupportViolationError("target places mass outside the proposal's support")
    live = p > 0
    fourth = float(np.sum(p[live] ** 4 / q[live]))
    second = float(np.sum(p**2))
    return (fourth - second**2) / m


def is_variance_empirical(
    opt: Policy, gen: Policy, m: int, trials: int, rng: np.random.Generator
) -> float:
    """Sample variance of mu_hat across independent trials of M draws each."""
    if trials < 2:
        raise InvalidRangeError(f"need at least 2 trials, got {trials}")
    estimates = is_estimates(opt, gen, m, trials, rng)
    return float(estimates.var(ddof=1))


def is_estimates(
    opt: Policy, gen: Policy, m: int, trials: int, rng: np.random.Generator
) -> np.ndarray:
    """One mu_hat value per trial."""
    if opt.space != gen.space:
        raise SpaceMismatchError("target and proposal policies live on different spaces")
    p = opt.probs()
    q = gen.probs()
    if np.any((p > 0) & (q == 0)):
        raise SupportViolationError("target places mass outside the proposal's support")
    ratio = np.zeros_like(p)
    live = q > 0
    ratio[live] = p[live] ** 2 / q[live]
    draws = sample_indices(gen, rng, (trials, m))
    return ratio[draws].mean(axis=1)


def tv_distance(p: Policy, q: Policy) -> float:
    """Total variation distance, (1/2) sum_y |p(y) - q(y)|."""
    if p.space != q.space:
        raise SpaceMismatchError("policies live on different spaces")
    return 0.5 * float(np.abs(p.probs() - q.probs()).sum())


def chebyshev_sample_bound(opt: Policy, gen: Policy, epsilon: float, delta: float) -> int:
    """Candidate count from Chebyshev for the scalar estimator of sum_y p*(y)^2.

    ceil(V1 / (delta * eps^2)) with V1 the single-draw closed-form variance;
    guarantees |mu_hat - mu| < epsilon with probability at least 1 - delta.
    """
    if not epsilon > 0:
        raise InvalidRangeError(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise InvalidRangeError(f"delta must lie in (0, 1), got {delta}")
    v1 = is_variance_closed_form(opt, gen, 1)
    return max(1, int(math.ceil(v1 / (delta * epsilon**2))))


def sample_complexity_bound(
    weight_bound_c: float, space_size: int, epsilon: float, delta: float
) -> int:
    """Candidate count guaranteeing TV <= epsilon with probability 1 - delta.

    ceil(C^2 |Y|^2 / (2 eps^2) * ln(2(|Y|+1)/delta)), from a Hoeffding bound
    per reply plus one for the normalizer, union-bounded and converted to a TV
    budget by splitting epsilon across replies.  A conservative upper bound.
    """
    if not weight_bound_c > 0:
        raise InvalidRangeError(f"weight bound must be positive, got {weight_bound_c}")
    if space_size < 1:
        raise InvalidRangeError(f"space size must be at least 1, got {space_size}")
    if not 0 < epsilon < 1:
        raise InvalidRangeError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0 < delta < 1:
        raise InvalidRangeError(f"delta must lie in (0, 1), got {delta}")
    lead = (weight_bound_c**2 * space_size**2) / (2 * epsilon**2)
    return int(math.ceil(lead * math.log(2 * (space_size + 1) / delta)))


def expected_reward(instance, outcome: MechanismOutcome, i: int) -> float:
    """Advertiser i's true expected reward over the realized allocation."""
    r = rewards_on_batch(instance.reports[i], outcome.batch)
    return float(outcome.allocation.distribution @ r)


def normalized_reward(
    instance, outcome: MechanismOutcome, counterfactual_outcome: MechanismOutcome, i: int
) -> float:
    """Expected reward minus what the advertiser would get by not participating.

    The counterfactual outcome must come from the same instance with
    advertiser i's report zeroed and a fresh candidate batch from the same
    proposal; both expectations use the advertiser's true rewards.
    """
    if (
        outcome.batch.space != instance.space
        or counterfactual_outcome.batch.space != instance.space
    ):
        raise InstanceMismatchError("outcomes do not share the instance's outcome space")
    if len(counterfactual_outcome.per_advertiser) != len(outcome.per_advertiser):
        raise InstanceMismatchError("outcomes disagree on the number of advertisers")
    return expected_reward(instance, outcome, i) - expected_reward(
        instance, counterfactual_outcome, i
    )


def pearson(xs, ys) -> float:
    """Pearson correlation coefficient of two equal-length samples."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.shape[0] < 2:
        raise DegenerateVarianceError("need two equal-length vectors of at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt((dx**2).sum()))
    sy = float(np.sqrt((dy**2).sum()))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateVarianceError("one of the samples has zero variance")
    return float((dx @ dy) / (sx * sy))
