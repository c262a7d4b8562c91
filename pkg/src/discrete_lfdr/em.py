"""Truncated EM estimation of the null parameters.

Only counts at or below the cut-off C are trusted to be null, so the
null sample is the multinomial vector (n_0, ..., n_C) with cell
probabilities f0(j) / sum_{t<=C} f0(t). The EM treats the mass that a
full sample would have placed above C as missing cells and imputes it
with n * f0(j) / F0(C) at the current parameters; the M-step then has
closed forms for every family. Zero-inflation membership enters through
the responsibilities tau0/tau1 at j = 0, and the Generalized Poisson
rate/dispersion split enters through tau2/tau3.

The imputation horizon extends past the observed maximum K until the
fitted null has swallowed all but 1e-10 of its mass; stopping at K would
bias the updates whenever the fitted tail reaches beyond the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DegenerateModelError
from .histogram import CountHistogram
from .null_models import GP, POISSON, THETA_MAX, ZIGP, ZIP, NullParams, null_log_pmf

_TAIL_EPS = 1e-10
_GRID_CAP = 1 << 21
_LOG_TINY = math.log(1e-300)
_LAM_MIN = 1e-8

# The EM touches pmf grids thousands of times per scan; index and
# log-factorial tables are shared across calls.
_JJ = np.arange(64, dtype=np.float64)
_GLN = gammaln(_JJ + 1.0)


def _tables(size: int):
    global _JJ, _GLN
    if size > _JJ.size:
        n = max(size, 2 * _JJ.size)
        _JJ = np.arange(n, dtype=np.float64)
        _GLN = gammaln(_JJ + 1.0)
    return _JJ[:size], _GLN[:size]


def _null_lp(p: NullParams, size: int) -> np.ndarray:
    """log f0 on 0..size-1 using the cached tables."""
    jj, gln = _tables(size)
    rate = p.lam + p.theta * jj
    lp = math.log(p.lam) + (jj - 1.0) * np.log(rate) - rate - gln
    if p.eta > 0.0:
        lp += math.log1p(-p.eta)
        lp[0] = math.log(p.eta + (1.0 - p.eta) * math.exp(-p.lam))
    return lp


@dataclass
class EmConfig:
    """Stopping rule for the EM iteration."""

    tol: float = 1e-8
    max_iter: int = 500


@dataclass
class NullFit:
    """Converged (or stopped) EM output for one (family, C) choice.

    ``loglik_trace`` holds the observed-data multinomial log-likelihood
    after the initial guess and after every EM step; it is non-decreasing
    up to floating-point noise. ``pi0_hat`` is the null-proportion
    estimate min(1, empirical mass <= C / fitted mass <= C).
    """

    params: NullParams
    C: int
    pi0_hat: float
    loglik_trace: list[float] = field(repr=False)
    converged: bool = True
    iterations: int = 0


def _horizon_guess(p: NullParams) -> int:
    """Mean plus a generous tail allowance; verified before use."""
    mu = p.lam / (1.0 - p.theta)
    sd = math.sqrt(p.lam) / (1.0 - p.theta) ** 1.5
    return int(mu + 16.0 * sd + 32.0)


def log_pmf_grid(p: NullParams, at_least: int, size_hint: int = 0) -> np.ndarray:
    """log f0 on 0..J with J >= at_least and tail mass beyond J < 1e-10.

    Starts from an analytic horizon guess (or the caller's hint from a
    previous call at nearby parameters), grows geometrically when the
    tail check fails, and gives up extending at 2^21 cells; a fitted
    tail that flat is already pathological and the rest is ignored.
    """
    size = max(at_least + 1, size_hint, _horizon_guess(p))
    while True:
        lp = _null_lp(p, size)
        pm = np.exp(lp)
        if 1.0 - float(pm.sum()) < _TAIL_EPS:
            cum = np.cumsum(pm)
            idx = int(np.searchsorted(cum, 1.0 - _TAIL_EPS, side="right"))
            return lp[: max(at_least, idx) + 1]
        if size >= _GRID_CAP:
            return lp
        size = min(size * 4, _GRID_CAP)


def multinomial_probs(p: NullParams, C: int) -> np.ndarray:
    """Cell probabilities f0(j) / sum_{t<=C} f0(t) for j = 0..C."""
    if C < 0:
        raise ValueError("cut-off must be nonnegative")
    lp = _null_lp(p, C + 1)
    norm = _logsum(lp)
    if norm < _LOG_TINY:
        raise DegenerateModelError("null mass vanishes below C")
    return np.exp(lp - norm)


def responsibilities(p: NullParams, j: int) -> tuple[float, float, float, float]:
    """Membership probabilities at count j under the current parameters.

    Returns (tau0, tau1, tau2, tau3): zero-inflation vs count-component
    membership, and the rate vs dispersion share lambda/(lambda+theta*j)
    and theta*j/(lambda+theta*j).
    """
    j = int(j)
    if j == 0 and p.eta > 0.0:
        tau0 = p.eta / float(np.exp(null_log_pmf(p, 0)))
    else:
        tau0 = 0.0
    tau2 = p.lam / (p.lam + p.theta * j)
    return tau0, 1.0 - tau0, tau2, 1.0 - tau2


def _logsum(lp: np.ndarray) -> float:
    m = float(lp.max())
    if not math.isfinite(m):
        return float("-inf")
    return m + math.log(float(np.exp(lp - m).sum()))


def _check_identifiable(family: str, h: CountHistogram, C: int) -> None:
    distinct = sum(1 for j in h.counts if j <= C)
    if distinct == 0:
        raise DegenerateModelError("no observations at or below the cut-off")
    if family != POISSON and distinct < 2:
        raise DegenerateModelError("unidentifiable")


@dataclass
class _Sample:
    """Dense view of the truncated sample, hoisted out of the EM loop."""

    nd: np.ndarray  # observed n_j over 0..C
    n_obs: float
    K: int
    coef: float  # log multinomial coefficient of Eq-style likelihood

    @classmethod
    def build(cls, h: CountHistogram, C: int):
        nd = h.dense(C).astype(np.float64)
        n = nd.sum()
        coef = float(gammaln(n + 1.0) - gammaln(nd + 1.0).sum())
        return cls(nd=nd, n_obs=n, K=h.K, coef=coef)


def _update(p: NullParams, lp: np.ndarray, sample: _Sample, C: int) -> NullParams:
    """One M-step from the weights implied by the current grid.

    The zero-inflation responsibility only touches the j = 0 cell, and
    every j = 0 term of the rate and dispersion sums vanishes (the
    expected root count 1 + (j-1)*tau2 is 0 there), so the mixture
    corrections reduce to subtracting w0*tau00 from the normalizers.
    """
    norm = _logsum(lp[: C + 1])
    if norm < _LOG_TINY:
        raise DegenerateModelError("null mass vanishes below C")
    size = lp.size
    jj, _ = _tables(size)
    w = np.empty(size)
    w[: C + 1] = sample.nd
    w[C + 1 :] = sample.n_obs * np.exp(lp[C + 1 :] - norm)

    total = float(w.sum())
    w0_tau00 = 0.0
    eta, lam, theta = p.eta, p.lam, p.theta
    if p.family in (ZIGP, ZIP):
        if p.eta > 0.0:
            w0_tau00 = w[0] * p.eta / math.exp(lp[0])
        eta = w0_tau00 / total

    if p.family == POISSON:
        lam = float(np.dot(jj, w)) / total
    elif p.family == ZIP:
        lam = float(np.dot(jj, w)) / (total - w0_tau00)
    else:  # GP and ZIGP share the rate/dispersion updates
        t = (jj - 1.0) * (lam / (lam + theta * jj))
        new_lam = (total + float(np.dot(w, t))) / (total - w0_tau00)
        theta = float(np.dot(w, jj - 1.0 - t)) / float(np.dot(jj, w))
        lam = new_lam

    eta = min(max(eta, 0.0), THETA_MAX)
    theta = min(max(theta, 0.0), THETA_MAX)
    lam = max(lam, _LAM_MIN)
    return NullParams(p.family, eta=eta, lam=lam, theta=theta)


def _loglik_from_grid(lp: np.ndarray, sample: _Sample, C: int) -> float:
    norm = _logsum(lp[: C + 1])
    if norm < _LOG_TINY:
        raise DegenerateModelError("null mass vanishes below C")
    return sample.coef + float(np.dot(sample.nd, lp[: C + 1])) - sample.n_obs * norm


def em_step(p: NullParams, h: CountHistogram, C: int) -> NullParams:
    """One EM update of the parameters given the truncated sample."""
    if C > h.K:
        raise ValueError("cut-off beyond support")
    _check_identifiable(p.family, h, C)
    sample = _Sample.build(h, C)
    lp = log_pmf_grid(p, max(C, h.K))
    return _update(p, lp, sample, C)


def truncated_loglik(p: NullParams, h: CountHistogram, C: int) -> float:
    """Observed-data log-likelihood: multinomial over the cells 0..C."""
    return _loglik_from_grid(_null_lp(p, C + 1), _Sample.build(h, C), C)


def _init_params(family: str, h: CountHistogram, C: int) -> NullParams:
    """Moment-style starting values from the truncated sample."""
    nd = h.dense(C).astype(np.float64)
    n = nd.sum()
    jj = np.arange(C + 1, dtype=np.float64)
    m = float(np.dot(jj, nd) / n)
    s2 = float(np.dot(nd, (jj - m) ** 2) / n)

    lam0 = max(m, _LAM_MIN)
    eta0 = 0.0
    theta0 = 0.0
    if family in (ZIGP, ZIP):
        ez = math.exp(-m)
        eta0 = min(max(0.01, (nd[0] / n - ez) / (1.0 - ez)), THETA_MAX)
    if family in (ZIGP, GP):
        theta0 = min(max(1.0 - math.sqrt(m / s2), 0.01), 0.9)
    return NullParams(family, eta=eta0, lam=lam0, theta=theta0)


def fit_null(
    family: str, h: CountHistogram, C: int, cfg: EmConfig | None = None
) -> NullFit:
    """Fit the null family to the truncated sample {(j, n_j): j <= C}.

    Iterates ``em_step`` until the observed-data log-likelihood moves by
    less than ``cfg.tol`` or ``cfg.max_iter`` is reached. Hitting the
    iteration cap is reported through ``converged=False``, not raised; a
    sample too degenerate to fit (single support point for a
    multi-parameter family) raises DegenerateModelError.
    """
    cfg = cfg or EmConfig()
    C = int(C)
    if C < 1:
        raise ValueError("cut-off must be at least 1")
    if C > h.K:
        raise ValueError("cut-off beyond support")
    _check_identifiable(family, h, C)

    sample = _Sample.build(h, C)
    params = _init_params(family, h, C)
    lp = log_pmf_grid(params, max(C, h.K))
    trace = [_loglik_from_grid(lp, sample, C)]
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        params = _update(params, lp, sample, C)
        lp = log_pmf_grid(params, max(C, h.K), size_hint=lp.size)
        trace.append(_loglik_from_grid(lp, sample, C))
        if abs(trace[-1] - trace[-2]) < cfg.tol:
            converged = True
            break

    den = float(np.exp(lp[: C + 1]).sum())
    if den < 1e-300:
        raise DegenerateModelError("null mass vanishes below C")
    pi0 = min(1.0, (sample.n_obs / h.N) / den)
    return NullFit(
        params=params,
        C=C,
        pi0_hat=pi0,
        loglik_trace=trace,
        converged=converged,
        iterations=iterations,
    )


def estimate_pi0(fit_params: NullParams, h: CountHistogram, C: int) -> float:
    """Null proportion: empirical mass at or below C over fitted null mass.

    pi0_hat = min(1, (sum_{j<=C} n_j / N) / (sum_{j<=C} f0(j))).
    """
    den = float(np.exp(_null_lp(fit_params, C + 1)).sum())
    if den < 1e-300:
        raise DegenerateModelError("null mass vanishes below C")
    num = sum(v for j, v in h.counts.items() if j <= C) / h.N
    return min(1.0, num / den)
