"""Monte-Carlo harness: mixture data generation and FDR/TPR benchmarking.

Each replication draws N positions; a position is null with probability
pi0 and takes its count from the null family, otherwise from the
non-null distribution (a Geometric tail or a Binomial bump). Generator
labels are kept so that false and true discoveries can be counted per
position. Replications use Philox substreams keyed by (seed, rep_index),
so results are independent of execution order and bitwise reproducible.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .cutoff import fixed_cutoff, select_c1, select_c2
from .em import EmConfig, log_pmf_grid
from .errors import DegenerateModelError, InputError
from .histogram import CountHistogram, from_positions
from .lfdr import PROCEDURES, bh_decide, one_stage_decide, storey_decide
from .null_models import FAMILIES, NullParams, gp_log_pmf
from .screening import compute_threshold, two_stage_decide

GEOMETRIC = "geometric"
BINOMIAL = "binomial"


@dataclass(frozen=True)
class NonNull:
    """Non-null count distribution used in the simulation mixture.

    ``min_count`` is the smallest attainable count: the geometric is
    shifted so its support starts there (default 1), the binomial is
    shifted up by it (default 0, i.e. unshifted).
    """

    kind: str
    p: float
    n_trials: int | None = None
    min_count: int | None = None

    def __post_init__(self):
        if self.kind not in (GEOMETRIC, BINOMIAL):
            raise InputError(f"unknown non-null kind {self.kind!r}")
        if not (0.0 < self.p < 1.0):
            raise InputError("non-null p must be in (0, 1)")
        if self.kind == BINOMIAL and (self.n_trials is None or self.n_trials < 1):
            raise InputError("binomial non-null needs n_trials >= 1")

    @property
    def start(self) -> int:
        if self.min_count is not None:
            return self.min_count
        return 1 if self.kind == GEOMETRIC else 0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == GEOMETRIC:
            return rng.geometric(self.p, size) + (self.start - 1)
        return rng.binomial(self.n_trials, self.p, size) + self.start


@dataclass(frozen=True)
class SimDesign:
    """One cell of the simulation study."""

    null: NullParams
    nonnull: NonNull
    pi0: float
    N: int
    reps: int
    alpha: float = 0.05
    cutoff: str = "c1"  # "c1" | "c2" | "fixed:<int>"
    fit_families: tuple[str, ...] = ("zigp",)
    procedures: tuple[str, ...] = PROCEDURES
    seed: int = 42
    truth_by_cutoff: bool = False
    c_true: int | None = None
    em: EmConfig | None = None

    def __post_init__(self):
        if not (0.0 < self.pi0 <= 1.0):
            raise InputError("pi0 must be in (0, 1]")
        if self.reps < 1:
            raise InputError("reps must be at least 1")
        if self.N < 10:
            raise InputError("N must be at least 10")
        if not (0.0 < self.alpha < 1.0):
            raise InputError("alpha must be in (0, 1)")
        _parse_cutoff(self.cutoff)
        for fam in self.fit_families:
            if fam not in FAMILIES:
                raise InputError(f"unknown family {fam!r}")
        for proc in self.procedures:
            if proc not in PROCEDURES:
                raise InputError(f"unknown procedure {proc!r}")


@dataclass
class Labels:
    """Per-position ground truth from the generator."""

    counts: np.ndarray
    is_null: np.ndarray


def _parse_cutoff(spec: str):
    if spec in ("c1", "c2"):
        return spec, None
    if spec.startswith("fixed:"):
        try:
            c = int(spec.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad fixed cut-off {spec!r}") from None
        if c < 1:
            raise InputError("fixed cut-off must be at least 1")
        return "fixed", c
    raise InputError(f"unknown cutoff method {spec!r}")


def _rep_rng(seed: int, rep_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(rep_index,))
    return np.random.Generator(np.random.Philox(ss))


def _sample_null(params: NullParams, rng: np.random.Generator, size: int) -> np.ndarray:
    out = np.zeros(size, dtype=np.int64)
    if size == 0:
        return out
    take_gp = np.ones(size, dtype=bool)
    if params.eta > 0.0:
        take_gp = rng.random(size) >= params.eta
    m = int(take_gp.sum())
    if m:
        grid = np.exp(gp_log_pmf(np.arange(_gp_horizon(params)), params.lam, params.theta))
        cdf = np.cumsum(grid)
        draws = np.searchsorted(cdf, rng.random(m), side="right")
        out[take_gp] = np.minimum(draws, cdf.size - 1)
    return out


def _gp_horizon(params: NullParams) -> int:
    if params.theta > 0.0:
        bare = NullParams("gp", lam=params.lam, theta=params.theta)
    else:
        bare = NullParams("poisson", lam=params.lam)
    return log_pmf_grid(bare, 0).size


def generate(design: SimDesign, rep_index: int) -> tuple[CountHistogram, Labels]:
    """Draw one replication: histogram plus per-position truth labels."""
    rng = _rep_rng(design.seed, rep_index)
    is_null = rng.random(design.N) < design.pi0
    counts = np.empty(design.N, dtype=np.int64)
    n_null = int(is_null.sum())
    counts[is_null] = _sample_null(design.null, rng, n_null)
    counts[~is_null] = design.nonnull.sample(rng, design.N - n_null)
    return from_positions(counts), Labels(counts=counts, is_null=is_null)


def fdp_tpr(rejected: set[int], h: CountHistogram, labels: Labels):
    """Position-level confusion counts against generator labels.

    Returns (FDP, TPR, V, R, S, T). FDP is 0 when nothing is rejected;
    TPR is defined as 1 when the replication holds no non-null positions.
    """
    rej = np.isin(labels.counts, sorted(rejected)) if rejected else np.zeros(len(labels.counts), bool)
    V = int(np.sum(rej & labels.is_null))
    R = int(np.sum(rej))
    S = int(np.sum(rej & ~labels.is_null))
    T = int(np.sum(~rej & ~labels.is_null))
    fdp = V / R if R > 0 else 0.0
    tpr = S / (S + T) if (S + T) > 0 else 1.0
    return fdp, tpr, V, R, S, T


def fdp_tpr_by_cutoff(rejected: set[int], h: CountHistogram, c_ref: int):
    """Confusion counts under the cut-off truth convention.

    Every rejection at a count at or below ``c_ref`` is erroneous;
    positions with counts above it are the targets.
    """
    V = sum(n for j, n in h.counts.items() if j <= c_ref and j in rejected)
    S = sum(n for j, n in h.counts.items() if j > c_ref and j in rejected)
    T = sum(n for j, n in h.counts.items() if j > c_ref and j not in rejected)
    R = V + S
    fdp = V / R if R > 0 else 0.0
    tpr = S / (S + T) if (S + T) > 0 else 1.0
    return fdp, tpr, V, R, S, T


@dataclass
class ProcedureStats:
    """Replication averages for one (procedure, family) cell."""

    r_bar: float
    fdr_hat: float
    tpr_hat: float
    sd_r: float
    sd_fdr: float
    sd_tpr: float


@dataclass
class SimResult:
    """Aggregated simulation output.

    ``stats`` is keyed by (procedure, family). Replications whose fit
    failed for a family are excluded from that family's averages and
    counted in ``failures``; ``subset_violations`` counts replications
    where the one-stage rejections were not a subset of the two-stage
    rejections (always 0 by construction, tracked as a self-check).
    """

    stats: dict[tuple[str, str], ProcedureStats]
    reps_used: dict[str, int]
    failures: dict[str, int]
    subset_violations: int = 0


def _run_rep(design: SimDesign, rep_index: int):
    h, labels = generate(design, rep_index)
    method, fixed_c = _parse_cutoff(design.cutoff)
    out = {}
    failures = []
    subset_violations = 0
    for fam in design.fit_families:
        try:
            if method == "c1":
                scan = select_c1(fam, h, design.em)
            elif method == "c2":
                scan = select_c2(fam, h, design.em)
            else:
                scan = fixed_cutoff(fam, h, min(fixed_c, h.K), design.em)
            fit = scan.chosen_fit
        except DegenerateModelError:
            failures.append(fam)
            continue
        thr = compute_threshold(fit.params, h.N, fit.C, h.K)
        rejections = {}
        for proc in design.procedures:
            if proc == "one-stage":
                rejections[proc] = one_stage_decide(fit, h, design.alpha)
            elif proc == "two-stage":
                rejections[proc] = two_stage_decide(fit, h, design.alpha, thr)
            elif proc == "storey":
                rejections[proc] = storey_decide(fit, h, design.alpha)
            else:
                rejections[proc] = bh_decide(fit, h, design.alpha)
        if "one-stage" in rejections and "two-stage" in rejections:
            if not rejections["one-stage"] <= rejections["two-stage"]:
                subset_violations += 1
        c_ref = design.c_true if design.c_true is not None else fit.C
        for proc, rej in rejections.items():
            if design.truth_by_cutoff:
                fdp, tpr, V, R, S, T = fdp_tpr_by_cutoff(rej, h, c_ref)
            else:
                fdp, tpr, V, R, S, T = fdp_tpr(rej, h, labels)
            out[(proc, fam)] = (R, fdp, tpr)
    return out, failures, subset_violations


def run(design: SimDesign, workers: int | None = None) -> SimResult:
    """Run all replications of a design and aggregate FDR/TPR/R.

    ``workers`` above 1 fans replications out to worker processes; the
    merge is ordered by replication index, so parallel and serial runs
    produce identical results. Defaults to the DISCRETE_LFDR_THREADS
    environment variable, else serial.
    """
    if workers is None:
        workers = int(os.environ.get("DISCRETE_LFDR_THREADS", "1") or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            per_rep = list(ex.map(_run_rep, [design] * design.reps, range(design.reps), chunksize=8))
    else:
        per_rep = [_run_rep(design, k) for k in range(design.reps)]

    series: dict[tuple[str, str], list[tuple]] = {}
    failures = {fam: 0 for fam in design.fit_families}
    subset_violations = 0
    for out, failed, sv in per_rep:
        subset_violations += sv
        for fam in failed:
            failures[fam] += 1
        for key, rec in out.items():
            series.setdefault(key, []).append(rec)

    stats = {}
    for key, recs in series.items():
        arr = np.asarray(recs, dtype=np.float64)
        sd = arr.std(axis=0, ddof=1) if arr.shape[0] > 1 else np.zeros(3)
        mean = arr.mean(axis=0)
        stats[key] = ProcedureStats(
            r_bar=float(mean[0]), fdr_hat=float(mean[1]), tpr_hat=float(mean[2]),
            sd_r=float(sd[0]), sd_fdr=float(sd[1]), sd_tpr=float(sd[2]),
        )
    reps_used = {fam: design.reps - failures[fam] for fam in design.fit_families}
    return SimResult(stats=stats, reps_used=reps_used, failures=failures,
                     subset_violations=subset_violations)


def result_table(design: SimDesign, result: SimResult) -> list[dict]:
    """Rows in the benchmark-table layout, one per procedure x family."""
    rows = []
    for proc in design.procedures:
        for fam in design.fit_families:
            st = result.stats.get((proc, fam))
            if st is None:
                continue
            rows.append({
                "procedure": proc, "family": fam,
                "R": st.r_bar, "FDR": st.fdr_hat, "TPR": st.tpr_hat,
                "sd_R": st.sd_r, "sd_FDR": st.sd_fdr, "sd_TPR": st.sd_tpr,
                "reps_used": result.reps_used[fam],
                "failures": result.failures[fam],
            })
    return rows


_DESIGN_KEYS = {
    "null.family", "null.eta", "null.lambda", "null.theta",
    "nonnull.kind", "nonnull.p", "nonnull.n_trials", "nonnull.min",
    "pi0", "n", "reps", "alpha", "cutoff", "seed", "families",
    "procedures", "truth_by_cutoff", "c_true",
}


def parse_design_file(path) -> SimDesign:
    """Read a simulation design from a flat key = value text file.

    Recognized keys: null.family, null.eta, null.lambda, null.theta,
    nonnull.kind, nonnull.p, nonnull.n_trials, nonnull.min, pi0, N,
    reps, alpha, cutoff, seed, families, procedures, truth_by_cutoff,
    c_true. ``#`` starts a comment. Lists are comma-separated.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc

    kv: dict[str, str] = {}
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}: expected key = value, got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in _DESIGN_KEYS:
            raise InputError(f"{path}: unknown design key {key!r}")
        kv[key] = val

    def need(key):
        if key not in kv:
            raise InputError(f"{path}: missing design key {key!r}")
        return kv[key]

    try:
        null = NullParams(
            family=need("null.family").lower(),
            eta=float(kv.get("null.eta", 0.0)),
            lam=float(need("null.lambda")),
            theta=float(kv.get("null.theta", 0.0)),
        )
        nonnull = NonNull(
            kind=need("nonnull.kind").lower(),
            p=float(need("nonnull.p")),
            n_trials=int(kv["nonnull.n_trials"]) if "nonnull.n_trials" in kv else None,
            min_count=int(kv["nonnull.min"]) if "nonnull.min" in kv else None,
        )
        families = tuple(
            f.strip().lower() for f in kv.get("families", "zigp").split(",") if f.strip()
        )
        procs_raw = kv.get("procedures", "all").strip().lower()
        procedures = PROCEDURES if procs_raw == "all" else tuple(
            p.strip() for p in procs_raw.split(",") if p.strip()
        )
        return SimDesign(
            null=null,
            nonnull=nonnull,
            pi0=float(need("pi0")),
            N=int(need("n")),
            reps=int(need("reps")),
            alpha=float(kv.get("alpha", 0.05)),
            cutoff=kv.get("cutoff", "c1").lower(),
            fit_families=families,
            procedures=procedures,
            seed=int(kv.get("seed", 42)),
            truth_by_cutoff=kv.get("truth_by_cutoff", "false").lower() in ("1", "true", "yes"),
            c_true=int(kv["c_true"]) if "c_true" in kv else None,
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: {exc}") from exc
