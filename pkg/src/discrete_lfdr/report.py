"""Per-count decision report assembly and TSV/JSON serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .em import NullFit
from .histogram import CountHistogram
from .lfdr import (
    PROCEDURES,
    bh_decide,
    local_fdr_map,
    one_stage_decide,
    p_value_map,
    storey_decide,
)
from .null_models import null_log_pmf
from .screening import ScreeningThreshold, compute_threshold, two_stage_decide

REPORT_COLUMNS = ("count", "n_positions", "f_hat", "f0_hat", "lfdr", "p_value")


@dataclass
class CountRow:
    count: int
    n_positions: int
    f_hat: float
    f0_hat: float
    lfdr: float  # clamped into [0, 1] for reporting
    p_value: float


@dataclass
class DecisionReport:
    """Per-count diagnostics plus the rejection set of each procedure."""

    alpha: float
    per_count: list[CountRow]
    rejected: dict[str, set[int]]
    positions_rejected: dict[str, int]
    d_n: int | None = None
    d_n_branch: str | None = None

    def to_json(self) -> str:
        doc = {
            "alpha": self.alpha,
            "d_n": self.d_n,
            "d_n_branch": self.d_n_branch,
            "per_count": [vars(r) for r in self.per_count],
            "rejected": {k: sorted(v) for k, v in self.rejected.items()},
            "positions_rejected": dict(self.positions_rejected),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DecisionReport":
        doc = json.loads(text)
        return cls(
            alpha=doc["alpha"],
            per_count=[CountRow(**r) for r in doc["per_count"]],
            rejected={k: set(v) for k, v in doc["rejected"].items()},
            positions_rejected={k: int(v) for k, v in doc["positions_rejected"].items()},
            d_n=doc.get("d_n"),
            d_n_branch=doc.get("d_n_branch"),
        )

    def to_tsv(self) -> str:
        procs = [p for p in PROCEDURES if p in self.rejected]
        header = list(REPORT_COLUMNS) + [f"reject_{p.replace('-', '')}" for p in procs]
        lines = ["\t".join(header)]
        for r in self.per_count:
            cells = [
                str(r.count),
                str(r.n_positions),
                f"{r.f_hat:.10g}",
                f"{r.f0_hat:.10g}",
                f"{r.lfdr:.10g}",
                f"{r.p_value:.10g}",
            ]
            cells += ["1" if r.count in self.rejected[p] else "0" for p in procs]
            lines.append("\t".join(cells))
        return "\n".join(lines) + "\n"


def decide(
    fit: NullFit,
    h: CountHistogram,
    alpha: float,
    procedures=PROCEDURES,
    threshold: ScreeningThreshold | None = None,
) -> DecisionReport:
    """Run the requested procedures on a fitted null and assemble a report.

    The screening threshold is computed from the fit when two-stage is
    requested and none is supplied.
    """
    procedures = tuple(procedures)
    fdr = local_fdr_map(fit, h)
    pv = p_value_map(fit, h)
    f0 = np.exp(null_log_pmf(fit.params, np.array(h.support, dtype=np.float64)))
    rows = [
        CountRow(
            count=j,
            n_positions=h.counts[j],
            f_hat=h.counts[j] / h.N,
            f0_hat=float(f0[i]),
            lfdr=min(1.0, max(0.0, fdr[j])),
            p_value=pv[j],
        )
        for i, j in enumerate(h.support)
    ]

    rejected: dict[str, set[int]] = {}
    dn_value = None
    dn_branch = None
    for proc in procedures:
        if proc == "one-stage":
            rejected[proc] = one_stage_decide(fit, h, alpha)
        elif proc == "two-stage":
            thr = threshold or compute_threshold(fit.params, h.N, fit.C, h.K)
            dn_value, dn_branch = thr.d_n, thr.family_branch
            rejected[proc] = two_stage_decide(fit, h, alpha, thr)
        elif proc == "storey":
            rejected[proc] = storey_decide(fit, h, alpha)
        elif proc == "bh":
            rejected[proc] = bh_decide(fit, h, alpha)
        else:
            raise ValueError(f"unknown procedure {proc!r}")

    positions = {
        proc: sum(h.counts[j] for j in js) for proc, js in rejected.items()
    }
    return DecisionReport(
        alpha=alpha,
        per_count=rows,
        rejected=rejected,
        positions_rejected=positions,
        d_n=dn_value,
        d_n_branch=dn_branch,
    )
