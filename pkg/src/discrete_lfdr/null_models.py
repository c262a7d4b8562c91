"""Null distribution family: zero-inflated Generalized Poisson and its
special cases, plus the tail upper bounds used by the screening step.

The family is parameterized by (eta, lambda, theta):

* ``eta``    zero-inflation probability, 0 <= eta < 1
* ``lambda`` rate, lambda > 0
* ``theta``  dispersion, 0 <= theta < 1

ZIP fixes theta = 0, GP fixes eta = 0, Poisson fixes both. All pmfs are
evaluated in log space; the (lambda + theta*j)^(j-1) factor overflows in
linear space once j reaches the low hundreds, which real domains do hit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

# Dispersion is kept strictly below 1 so that the screening denominators
# e^(theta-1) - theta and theta - 1 - log(theta) stay away from 0.
THETA_MAX = 1.0 - 1e-8

ZIGP = "zigp"
ZIP = "zip"
GP = "gp"
POISSON = "poisson"
FAMILIES = (ZIGP, ZIP, GP, POISSON)


@dataclass(frozen=True)
class NullParams:
    """Parameter set for one member of the null family.

    Family restrictions are enforced at construction: ZIP implies
    theta = 0, GP implies eta = 0, Poisson implies both.
    """

    family: str
    eta: float = 0.0
    lam: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not (0.0 <= self.eta < 1.0):
            raise ValueError(f"eta must be in [0, 1), got {self.eta}")
        if not (self.lam > 0.0):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not (0.0 <= self.theta <= THETA_MAX):
            raise ValueError(f"theta must be in [0, 1), got {self.theta}")
        if self.family in (ZIP, POISSON) and self.theta != 0.0:
            raise ValueError(f"family {self.family} requires theta = 0")
        if self.family in (GP, POISSON) and self.eta != 0.0:
            raise ValueError(f"family {self.family} requires eta = 0")

    @property
    def n_free(self) -> int:
        """Number of free parameters (ZIGP 3, ZIP/GP 2, Poisson 1)."""
        return {ZIGP: 3, ZIP: 2, GP: 2, POISSON: 1}[self.family]


def _check_gp_args(lam: float, theta: float) -> None:
    if not (lam > 0.0) or not (0.0 <= theta <= THETA_MAX):
        raise ValueError("invalid GP parameters")


def gp_log_pmf(j, lam: float, theta: float):
    """Log pmf of the Generalized Poisson at j (scalar or array).

    log g(j) = log(lambda) + (j-1) log(lambda + theta j) - (lambda + theta j)
               - log(j!)
    """
    _check_gp_args(lam, theta)
    j = np.asarray(j, dtype=np.float64)
    rate = lam + theta * j
    return np.log(lam) + (j - 1.0) * np.log(rate) - rate - gammaln(j + 1.0)


def gp_pmf(j, lam: float, theta: float):
    """Generalized Poisson pmf; proper for 0 <= theta < 1."""
    return np.exp(gp_log_pmf(j, lam, theta))


def null_log_pmf(p: NullParams, j):
    """Log pmf of the zero-inflated null f0 at j (scalar or array)."""
    j = np.asarray(j)
    lp = np.log1p(-p.eta) + gp_log_pmf(j, p.lam, p.theta)
    if p.eta > 0.0:
        at_zero = math.log(p.eta + (1.0 - p.eta) * math.exp(-p.lam))
        lp = np.where(j == 0, at_zero, lp)
    return lp if lp.ndim else float(lp)


def null_pmf(p: NullParams, j):
    """Null pmf f0(j): eta + (1-eta) e^-lambda at 0, (1-eta) g(j) above."""
    return np.exp(null_log_pmf(p, j))


def null_mean(p: NullParams) -> float:
    """Mean of the null: (1 - eta) * lambda / (1 - theta)."""
    return (1.0 - p.eta) * p.lam / (1.0 - p.theta)


def gp_tail_bound(D: int, lam: float, theta: float) -> float:
    """Klar upper bound on the GP tail P(X >= D).

    Valid for 0 < theta < 1 and D >= lambda / (e^(theta-1) - theta), and
    only when delta_D = 1 - e^(1-theta) (theta + lambda/(D+1)) is positive;
    otherwise the bound does not apply and a ValueError is raised.
    """
    _check_gp_args(lam, theta)
    if theta <= 0.0:
        raise ValueError("bound not applicable: requires 0 < theta < 1")
    if D < lam / (math.exp(theta - 1.0) - theta):
        raise ValueError("bound not applicable: D below lambda/(e^(theta-1) - theta)")
    delta = 1.0 - math.exp(1.0 - theta) * (theta + lam / (D + 1.0))
    if delta <= 0.0:
        raise ValueError("bound not applicable: delta_D <= 0")
    log_bound = (
        -math.log(delta)
        + math.log(lam)
        + (D - 1.0) * math.log(lam + theta * D)
        - (D + 0.5) * math.log(D)
        - lam
        - (theta - 1.0) * D
    )
    return math.exp(log_bound)


def poisson_tail_bound(D: int, lam: float) -> float:
    """Chernoff upper bound on the Poisson tail: e^-lambda (e lambda)^D / D^D.

    Requires 0 < lambda < D.
    """
    if not (0.0 < lam < D):
        raise ValueError("bound not applicable: requires 0 < lambda < D")
    return math.exp(-lam + D * (1.0 + math.log(lam) - math.log(D)))
