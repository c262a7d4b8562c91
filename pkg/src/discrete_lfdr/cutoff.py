"""Data-driven selection of the null cut-off C.

Two criteria are offered. The first scores each candidate nu by the
change-point likelihood whose variable part is the CUSUM of
n_j * log(f0_hat(j) / f_hat(j)) over j <= nu, with f0_hat refit at every
nu and f_hat(j) = n_j / N; the candidate maximizing the score wins. The
second extends Efron's central-matching idea to discrete data: it scores
nu by the truncated-sample likelihood xi^n (1-xi)^(N-n) prod f0(j)^n_j
with xi the fitted null mass at or below nu times pi0_hat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .em import EmConfig, NullFit, fit_null
from .errors import DegenerateModelError
from .histogram import CountHistogram
from .null_models import POISSON, NullParams, null_log_pmf

_NEG_INF = float("-inf")


@dataclass
class ScanEntry:
    """One candidate cut-off: its refit null and criterion score.

    ``loglik`` carries the profile log-likelihood including the pi0 term
    (the penalized form of the change-point criterion); for the Efron
    extension the score is itself a log-likelihood and loglik is None.
    """

    nu: int
    fit: NullFit | None
    score: float
    loglik: float | None = None


@dataclass
class CutoffScan:
    """Full sweep over nu = 1..K with the selected cut-off."""

    family: str
    method: str  # "c1" | "c2" | "fixed"
    per_nu: list[ScanEntry]
    chosen: int

    @property
    def chosen_fit(self) -> NullFit:
        for e in self.per_nu:
            if e.nu == self.chosen and e.fit is not None:
                return e.fit
        raise LookupError(f"no fit stored for chosen cut-off {self.chosen}")


def _empirical_loglik(h: CountHistogram) -> float:
    """sum over observed counts of n_j log(n_j / N); constant in nu."""
    ns = np.array([h.counts[j] for j in h.support], dtype=np.float64)
    return float(np.dot(ns, np.log(ns / h.N)))


def c1_score(fit: NullFit, h: CountHistogram, nu: int) -> float:
    """Change-point score of the cut-off candidate nu.

    S_nu = sum_{j <= nu, n_j > 0} n_j log(f0_hat(j) / f_hat(j))
           + sum_{j <= K} n_j log f_hat(j)

    The second sum does not depend on nu; it is included so the score is
    the full change-point log-likelihood, net of the pi0 penalty.
    Returns -inf when the fitted null has no mass at an observed j <= nu.
    """
    js = np.array([j for j in h.support if j <= nu], dtype=np.float64)
    if js.size == 0:
        return _NEG_INF
    ns = np.array([h.counts[int(j)] for j in js], dtype=np.float64)
    lf0 = null_log_pmf(fit.params, js)
    if not np.all(np.isfinite(lf0)):
        return _NEG_INF
    cusum = float(np.dot(ns, lf0 - np.log(ns / h.N)))
    return cusum + _empirical_loglik(h)


def c2_score(fit: NullFit, h: CountHistogram, nu: int) -> float:
    """Truncated-sample log-likelihood of the cut-off candidate nu.

    With xi = pi0_hat * sum_{j <= nu} f0_hat(j) and n positions at or
    below nu: n log(xi) + (N - n) log(1 - xi) + sum_{j<=nu} n_j log f0_hat(j).
    Candidates where xi reaches 0 or 1 are disqualified (-inf).
    """
    lp = null_log_pmf(fit.params, np.arange(nu + 1, dtype=np.float64))
    xi = fit.pi0_hat * float(np.exp(lp).sum())
    if not (0.0 < xi < 1.0):
        return _NEG_INF
    n = sum(v for j, v in h.counts.items() if j <= nu)
    obs = [(j, v) for j, v in h.counts.items() if j <= nu]
    fit_part = sum(v * float(lp[j]) for j, v in obs)
    return n * math.log(xi) + (h.N - n) * math.log1p(-xi) + fit_part


def _min_support(family: str) -> int:
    """Distinct observed counts a candidate needs to be admissible.

    One more than the free parameter count: with exactly as many cells
    as parameters the truncated fit is saturated and the criterion
    degenerates into rewarding whichever ridge point the EM happens to
    stop at.
    """
    return NullParams(family, lam=1.0).n_free + 1


def _sweep(family, h, cfg, scorer, with_loglik, min_support=None):
    required = _min_support(family) if min_support is None else min_support
    entries: list[ScanEntry] = []
    for nu in range(1, h.K + 1):
        observed = [j for j in h.support if j <= nu]
        if len(observed) < required:
            entries.append(ScanEntry(nu, None, _NEG_INF))
            continue
        try:
            fit = fit_null(family, h, nu, cfg)
        except DegenerateModelError:
            entries.append(ScanEntry(nu, None, _NEG_INF))
            continue
        score = scorer(fit, h, nu)
        loglik = None
        if with_loglik and math.isfinite(score):
            n_nu = sum(h.counts[j] for j in observed)
            loglik = score + n_nu * math.log(fit.pi0_hat)
        entries.append(ScanEntry(nu, fit, score, loglik))
    return entries


def _pick(entries: list[ScanEntry], minimize: bool = False) -> int:
    best = None
    for e in entries:
        if not math.isfinite(e.score):
            continue
        if best is None:
            best = e
        elif (e.score < best.score) if minimize else (e.score > best.score):
            best = e
    if best is None:
        raise DegenerateModelError("no admissible cut-off")
    return best.nu


def select_c1(
    family: str,
    h: CountHistogram,
    cfg: EmConfig | None = None,
    min_support: int | None = None,
) -> CutoffScan:
    """Scan nu = 1..K and pick the change-point criterion maximizer.

    Ties break toward the smallest nu. Candidates whose truncated sample
    has too few distinct counts to pin the family down are disqualified
    with score -inf.
    """
    if h.K < 1:
        raise DegenerateModelError("no admissible cut-off: all counts are zero")
    entries = _sweep(family, h, cfg, c1_score, with_loglik=True, min_support=min_support)
    return CutoffScan(family, "c1", entries, _pick(entries))


def select_c2(
    family: str,
    h: CountHistogram,
    cfg: EmConfig | None = None,
    literal_argmin: bool = False,
    min_support: int | None = None,
) -> CutoffScan:
    """Scan nu = 1..K and pick by the truncated-likelihood criterion.

    The likelihood is maximized by default; ``literal_argmin=True`` picks
    the minimizer instead, for comparison with the sign convention some
    write-ups use.
    """
    if h.K < 1:
        raise DegenerateModelError("no admissible cut-off: all counts are zero")
    entries = _sweep(family, h, cfg, c2_score, with_loglik=False, min_support=min_support)
    return CutoffScan(family, "c2", entries, _pick(entries, minimize=literal_argmin))


def fixed_cutoff(family: str, h: CountHistogram, C: int, cfg: EmConfig | None = None) -> CutoffScan:
    """Skip the scan: fit once at a user-supplied cut-off."""
    fit = fit_null(family, h, C, cfg)
    entry = ScanEntry(C, fit, c1_score(fit, h, C))
    return CutoffScan(family, "fixed", [entry], C)


def scan_table(scan: CutoffScan) -> list[dict]:
    """Rows (nu, eta, lambda, theta, pi0, score) for TSV/JSON export."""
    rows = []
    for e in scan.per_nu:
        if e.fit is None:
            rows.append(
                {"nu": e.nu, "eta": None, "lambda": None, "theta": None,
                 "pi0": None, "score": None}
            )
        else:
            p = e.fit.params
            rows.append(
                {"nu": e.nu, "eta": p.eta, "lambda": p.lam, "theta": p.theta,
                 "pi0": e.fit.pi0_hat,
                 "score": e.score if math.isfinite(e.score) else None}
            )
    return rows
