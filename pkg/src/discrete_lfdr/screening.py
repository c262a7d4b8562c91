"""Screening threshold D_N and the two-stage decision rule.

Relative frequencies are hopeless estimates of f in the sparse upper
tail, so instead of trusting local FDR values there, counts at or above
a threshold D_N are rejected outright. D_N is the smallest integer that
makes the probability of any null draw reaching it vanish as N grows:
for GP-type nulls it comes from the Klar tail bound, for Poisson-type
nulls from the Chernoff bound. It is clamped into (C, K]: a value below
C+1 means everything above the cut-off is auto-rejected, a value above
K means screening has nothing to add.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .em import NullFit
from .histogram import CountHistogram
from .lfdr import local_fdr_map
from .null_models import GP, ZIGP, NullParams


@dataclass(frozen=True)
class ScreeningThreshold:
    """D_N with the branch and the terms that produced it.

    ``unclamped`` is the ceiling of the max term before the min-with-K
    clamp, so callers can see whether the K clamp (no screening) or the
    C+1 floor (screen everything above C) fired.
    """

    d_n: int
    family_branch: str  # "gp" | "poisson"
    lambda_term: float
    logn_term: float
    c_plus_1: int
    k: int
    unclamped: int


def compute_threshold(params: NullParams, N: int, C: int, K: int) -> ScreeningThreshold:
    """Threshold formula without the C < K precondition (C = K gives K)."""
    if N < 2:
        raise ValueError("N must be at least 2")
    theta = params.theta
    if params.family in (ZIGP, GP) and theta > 0.0:
        branch = "gp"
        lam_term = params.lam / (math.exp(theta - 1.0) - theta)
        logn_term = math.log(N) / (theta - 1.0 - math.log(theta))
    else:
        # theta = 0 would make the GP denominators blow up; a ZIGP that
        # degenerated to theta = 0 is a ZIP and is screened as one.
        branch = "poisson"
        lam_term = params.lam
        logn_term = math.log(N)
    unclamped = math.ceil(max(lam_term, logn_term, C + 1))
    return ScreeningThreshold(
        d_n=min(unclamped, K),
        family_branch=branch,
        lambda_term=lam_term,
        logn_term=logn_term,
        c_plus_1=C + 1,
        k=K,
        unclamped=unclamped,
    )


def d_n(fit: NullFit, N: int, C: int, K: int) -> ScreeningThreshold:
    """Screening threshold for a fitted null over N positions.

    GP-type branch (ZIGP and GP with theta > 0):
        D_N = min(ceil(max(lambda/(e^(theta-1) - theta),
                           log N/(theta - 1 - log theta), C+1)), K)
    Poisson-type branch (ZIP, Poisson, or theta = 0):
        D_N = min(ceil(max(lambda, log N, C+1)), K)
    """
    if not (0 <= C < K):
        raise ValueError("requires 0 <= C < K")
    return compute_threshold(fit.params, N, C, K)


def two_stage_decide(
    fit: NullFit, h: CountHistogram, alpha: float, threshold: ScreeningThreshold
) -> set[int]:
    """Auto-reject counts >= D_N; below it, fall back on local FDR."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must be in (0, 1)")
    fdr = local_fdr_map(fit, h)
    return {j for j in h.support if j >= threshold.d_n or fdr[j] < alpha}
