"""Command-line interface: fit, test, simulate, scan.

Exit codes: 0 on success, 2 for unreadable or malformed input, 3 for a
statistical degeneracy (unidentifiable fit, no admissible cut-off).
All randomness flows from --seed (default 42); nothing reads the clock.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .cutoff import CutoffScan, fixed_cutoff, scan_table, select_c1, select_c2
from .em import EmConfig
from .errors import DegenerateModelError, InputError
from .histogram import read_counts_tsv, write_counts_tsv
from .lfdr import PROCEDURES
from .null_models import FAMILIES
from .report import decide
from .screening import compute_threshold
from .simulate import generate, parse_design_file, result_table, run

_NA = "NA"


def _fmt(x, digits=6):
    if x is None:
        return _NA
    if isinstance(x, float):
        return f"{x:.{digits}g}"
    return str(x)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--em-tol", type=float, default=1e-8, help="EM convergence tolerance")
    p.add_argument("--em-max-iter", type=int, default=500, help="EM iteration cap")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--c2-literal-argmin", action="store_true",
                   help="pick the C2 cut-off by minimizing its likelihood instead")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="discrete-lfdr")
    sub = ap.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="estimate the null, cut-off, and screening threshold")
    fit.add_argument("--input", required=True, help="histogram TSV")
    fit.add_argument("--family", choices=FAMILIES + ("all",), default="zigp")
    fit.add_argument("--cutoff", default="c1", help="c1 | c2 | fixed:<int>")
    fit.add_argument("--scan-out", help="write the full nu-scan table to this TSV path")
    _add_common(fit)

    test = sub.add_parser("test", help="per-count decision report")
    test.add_argument("--input", required=True)
    test.add_argument("--family", choices=FAMILIES + ("all",), default="zigp")
    test.add_argument("--cutoff", default="c1")
    test.add_argument("--alpha", type=float, default=0.05)
    test.add_argument("--procedure", choices=PROCEDURES + ("all",), default="all")
    _add_common(test)

    sim = sub.add_parser("simulate", help="run a Monte-Carlo design")
    sim.add_argument("--design", required=True, help="design key=value file")
    sim.add_argument("--reps", type=int, help="override the design's replication count")
    sim.add_argument("--alpha", type=float, help="override the design's alpha")
    sim.add_argument("--truth-by-cutoff", action="store_true",
                     help="count errors against the cut-off instead of generator labels")
    sim.add_argument("--emit-histogram", metavar="DIR",
                     help="write each replication's histogram TSV into DIR")
    _add_common(sim)

    scan = sub.add_parser("scan", help="emit the full cut-off scan table")
    scan.add_argument("--input", required=True)
    scan.add_argument("--family", choices=FAMILIES, default="zigp")
    scan.add_argument("--cutoff", choices=("c1", "c2"), default="c1")
    _add_common(scan)
    return ap


def _run_scan(family, h, method, cfg, literal_argmin=False) -> CutoffScan:
    if method == "c1":
        return select_c1(family, h, cfg)
    if method == "c2":
        return select_c2(family, h, cfg, literal_argmin=literal_argmin)
    if method.startswith("fixed:"):
        try:
            c = int(method.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad cut-off spec {method!r}") from None
        if c < 1:
            raise InputError("fixed cut-off must be at least 1")
        return fixed_cutoff(family, h, c, cfg)
    raise InputError(f"unknown cutoff method {method!r}")


def _fit_row(family, h, args, cfg) -> dict:
    scan = _run_scan(family, h, args.cutoff, cfg, args.c2_literal_argmin)
    fit = scan.chosen_fit
    thr = compute_threshold(fit.params, h.N, fit.C, h.K)
    p = fit.params
    return {
        "family": family,
        "eta": p.eta if family in ("zigp", "zip") else None,
        "lambda": p.lam,
        "theta": p.theta if family in ("zigp", "gp") else None,
        "pi0": fit.pi0_hat,
        "C": fit.C,
        "D": thr.d_n,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "_scan": scan,
    }


def _scan_tsv(scan: CutoffScan) -> str:
    lines = ["nu\teta\tlambda\ttheta\tpi0\tscore"]
    for row in scan_table(scan):
        lines.append("\t".join(_fmt(row[k], 10) for k in ("nu", "eta", "lambda", "theta", "pi0", "score")))
    return "\n".join(lines) + "\n"


def _cmd_fit(args) -> int:
    h = read_counts_tsv(args.input)
    cfg = EmConfig(tol=args.em_tol, max_iter=args.em_max_iter)
    families = FAMILIES if args.family == "all" else (args.family,)
    rows = [_fit_row(fam, h, args, cfg) for fam in families]
    if args.scan_out:
        with open(args.scan_out, "w", encoding="utf-8") as fh:
            fh.write(_scan_tsv(rows[0]["_scan"]))
    for row in rows:
        row.pop("_scan")
    if args.format == "json":
        doc = rows[0] if args.family != "all" else rows
        print(json.dumps(doc, indent=2))
    else:
        cols = ("family", "eta", "lambda", "theta", "pi0", "C", "D")
        print("\t".join(cols))
        for row in rows:
            print("\t".join(_fmt(row[c]) for c in cols))
    return 0


def _cmd_test(args) -> int:
    h = read_counts_tsv(args.input)
    cfg = EmConfig(tol=args.em_tol, max_iter=args.em_max_iter)
    procs = PROCEDURES if args.procedure == "all" else (args.procedure,)
    families = FAMILIES if args.family == "all" else (args.family,)

    reports = {}
    for fam in families:
        scan = _run_scan(fam, h, args.cutoff, cfg, args.c2_literal_argmin)
        reports[fam] = decide(scan.chosen_fit, h, args.alpha, procs)

    if args.family == "all":
        # rejection totals per family x procedure
        if args.format == "json":
            doc = {
                fam: {proc: rep.positions_rejected[proc] for proc in procs}
                for fam, rep in reports.items()
            }
            print(json.dumps(doc, indent=2))
        else:
            print("\t".join(("family",) + procs))
            for fam, rep in reports.items():
                print("\t".join([fam] + [str(rep.positions_rejected[p]) for p in procs]))
        return 0

    rep = reports[families[0]]
    if args.format == "json":
        print(rep.to_json())
    else:
        sys.stdout.write(rep.to_tsv())
    return 0


def _cmd_simulate(args) -> int:
    design = parse_design_file(args.design)
    updates = {"seed": args.seed}
    if args.reps is not None:
        updates["reps"] = args.reps
    if args.alpha is not None:
        updates["alpha"] = args.alpha
    if args.truth_by_cutoff:
        updates["truth_by_cutoff"] = True
    updates["em"] = EmConfig(tol=args.em_tol, max_iter=args.em_max_iter)
    from dataclasses import replace

    design = replace(design, **updates)

    if args.emit_histogram:
        os.makedirs(args.emit_histogram, exist_ok=True)
        for k in range(design.reps):
            h, _ = generate(design, k)
            write_counts_tsv(h, os.path.join(args.emit_histogram, f"rep{k:04d}.tsv"))

    result = run(design)
    rows = result_table(design, result)
    if args.format == "json":
        print(json.dumps({"rows": rows, "subset_violations": result.subset_violations}, indent=2))
    else:
        cols = ("procedure", "family", "R", "FDR", "TPR", "sd_R", "sd_FDR", "sd_TPR",
                "reps_used", "failures")
        print("\t".join(cols))
        for row in rows:
            print("\t".join(_fmt(row[c]) for c in cols))
    return 0


def _cmd_scan(args) -> int:
    h = read_counts_tsv(args.input)
    cfg = EmConfig(tol=args.em_tol, max_iter=args.em_max_iter)
    scan = _run_scan(args.family, h, args.cutoff, cfg, args.c2_literal_argmin)
    if args.format == "json":
        print(json.dumps({"chosen": scan.chosen, "rows": scan_table(scan)}, indent=2))
    else:
        sys.stdout.write(_scan_tsv(scan))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "test":
            return _cmd_test(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_scan(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegenerateModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
