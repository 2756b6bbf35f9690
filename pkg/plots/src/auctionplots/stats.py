"""Statistics recomputed from first principles.

Deliberately independent of the auction engine's implementations: the
cross-check between the two codebases is part of the test surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist


@dataclass(frozen=True)
class GroupSummary:
    mean: float
    ci_half: float
    n: int


@dataclass(frozen=True)
class FitSummary:
    slope: float
    intercept: float
    r_squared: float
    pearson_r: float
    n: int


def summarize(values: list[float], ci_level: float) -> GroupSummary:
    """Mean with a symmetric normal-approximation confidence interval."""
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return GroupSummary(mean=mean, ci_half=0.0, n=n)
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    z = NormalDist().inv_cdf(0.5 + ci_level / 2.0)
    return GroupSummary(mean=mean, ci_half=z * math.sqrt(var / n), n=n)


def least_squares(xs: list[float], ys: list[float]) -> FitSummary:
    """Simple linear regression with R^2 and the Pearson coefficient."""
    n = len(xs)
    if n < 2 or len(ys) != n:
        raise ValueError("need two equal-length samples of at least 2 points")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    syy = sum((y - mean_y) ** 2 for y in ys)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("degenerate sample: zero variance")
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    residual = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    return FitSummary(
        slope=slope,
        intercept=intercept,
        r_squared=1.0 - residual / syy,
        pearson_r=sxy / math.sqrt(sxx * syy),
        n=n,
    )
