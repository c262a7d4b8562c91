"""Local FDR and the one-stage, Storey, and BH decision rules.

Decisions are made per unique count value: every position sharing a
count shares its fate. The local FDR at an observed count j is
pi0_hat * f0_hat(j) / f_hat(j) with f_hat(j) = n_j / N; the one-stage
rule rejects where it drops below alpha. Storey's rule (and BH, its
pi0 = 1 special case) runs on fitted-null upper-tail p-values with the
rank replaced by the number of positions at or beyond the cut, so the
procedure operates at position scale despite the count-level ties.
"""

from __future__ import annotations

import numpy as np

from .em import NullFit
from .histogram import CountHistogram
from .null_models import null_log_pmf, null_pmf

PROCEDURES = ("one-stage", "two-stage", "storey", "bh")


def local_fdr(fit: NullFit, h: CountHistogram, j: int) -> float:
    """pi0_hat * f0_hat(j) / f_hat(j); defined only on the support."""
    nj = h.n(j)
    if nj == 0:
        raise ValueError("fdr undefined off support")
    return fit.pi0_hat * float(null_pmf(fit.params, j)) * h.N / nj


def local_fdr_map(fit: NullFit, h: CountHistogram) -> dict[int, float]:
    """Local FDR at every observed count, in one pmf evaluation."""
    js = np.array(h.support, dtype=np.float64)
    ns = np.array([h.counts[j] for j in h.support], dtype=np.float64)
    f0 = np.exp(null_log_pmf(fit.params, js))
    vals = fit.pi0_hat * f0 * h.N / ns
    return {int(j): float(v) for j, v in zip(js, vals)}


def one_stage_decide(fit: NullFit, h: CountHistogram, alpha: float) -> set[int]:
    """Reject the counts whose local FDR falls below alpha."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must be in (0, 1)")
    fdr = local_fdr_map(fit, h)
    return {j for j, v in fdr.items() if v < alpha}


def null_p_value(fit: NullFit, j: int) -> float:
    """Upper-tail p-value of the fitted null, inclusive at j."""
    j = int(j)
    if j <= 0:
        return 1.0
    head = float(np.exp(null_log_pmf(fit.params, np.arange(j, dtype=np.float64))).sum())
    return max(0.0, 1.0 - head)


def p_value_map(fit: NullFit, h: CountHistogram) -> dict[int, float]:
    """Fitted-null upper-tail p-value at every observed count."""
    f0 = np.exp(null_log_pmf(fit.params, np.arange(h.K + 1, dtype=np.float64)))
    head = np.concatenate([[0.0], np.cumsum(f0)[:-1]])
    return {j: max(0.0, 1.0 - float(head[j])) for j in h.support}


def _step_up(fit: NullFit, h: CountHistogram, alpha: float, pi0: float) -> set[int]:
    # Ascending p-value order is descending count order here; the rank is
    # replaced by the number of positions whose p-value is at most p_(i).
    pv = p_value_map(fit, h)
    js_desc = sorted(h.support, reverse=True)
    cum_positions = 0
    last_ok = None
    for i, j in enumerate(js_desc):
        cum_positions += h.counts[j]
        if pv[j] <= alpha * cum_positions / (h.N * pi0):
            last_ok = i
    if last_ok is None:
        return set()
    return set(js_desc[: last_ok + 1])


def storey_decide(fit: NullFit, h: CountHistogram, alpha: float) -> set[int]:
    """Step-up rule with the estimated null proportion plugged in."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must be in (0, 1)")
    return _step_up(fit, h, alpha, fit.pi0_hat)


def bh_decide(fit: NullFit, h: CountHistogram, alpha: float) -> set[int]:
    """Benjamini-Hochberg: the Storey rule with pi0 fixed at 1."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must be in (0, 1)")
    return _step_up(fit, h, alpha, 1.0)
