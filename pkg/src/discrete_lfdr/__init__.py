"""Empirical-null multiple testing for discrete count data.

Estimates a zero-inflated Generalized Poisson null from the low-count
bulk of a mutation-count histogram via truncated EM, selects the null
cut-off by change-point or truncated-likelihood criteria, and applies
local-FDR, two-stage screened, Storey, and BH decision rules. A
Monte-Carlo harness benchmarks FDR and TPR of the procedures.
"""

from .cutoff import (
    CutoffScan,
    ScanEntry,
    c1_score,
    c2_score,
    fixed_cutoff,
    scan_table,
    select_c1,
    select_c2,
)
from .em import (
    EmConfig,
    NullFit,
    em_step,
    estimate_pi0,
    fit_null,
    multinomial_probs,
    responsibilities,
    truncated_loglik,
)
from .errors import DegenerateModelError, InputError
from .histogram import (
    CountHistogram,
    from_positions,
    null_mass_split,
    read_counts_tsv,
    write_counts_tsv,
)
from .lfdr import (
    PROCEDURES,
    bh_decide,
    local_fdr,
    local_fdr_map,
    null_p_value,
    one_stage_decide,
    p_value_map,
    storey_decide,
)
from .null_models import (
    FAMILIES,
    GP,
    POISSON,
    ZIGP,
    ZIP,
    NullParams,
    gp_log_pmf,
    gp_pmf,
    gp_tail_bound,
    null_log_pmf,
    null_pmf,
    poisson_tail_bound,
)
from .report import CountRow, DecisionReport, decide
from .screening import ScreeningThreshold, compute_threshold, d_n, two_stage_decide
from .simulate import (
    Labels,
    NonNull,
    ProcedureStats,
    SimDesign,
    SimResult,
    fdp_tpr,
    fdp_tpr_by_cutoff,
    generate,
    parse_design_file,
    result_table,
    run,
)

__version__ = "0.1.0"
