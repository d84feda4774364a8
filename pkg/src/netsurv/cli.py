"""Batch pipeline: preprocess, network selection, validation, survival, reporting.

Exit codes: 0 success, 1 input or usage error, 2 statistical-acceptance failure
(validation), 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (GLIOMA_TYPES, build_cohort, load_clinical, load_expression,
                     write_expression)
from .coxlasso import fit_with_pmax, pmax_from_events, write_cox_fit
from .glasso import GlassoConfig, glasso_fit, write_precision
from .netselect import (compare_sets, extract_network, hub_ranking, select_variables,
                        write_dot, write_graphml, write_hub_ranking,
                        write_set_comparison)
from .preprocess import empirical_covariance, filter_normal, npn_transform, write_normality_report
from .subsetval import DEFAULT_RHO_GRID, choose_validation_rho, validate_subset, write_validation_report
from .survstrat import (kaplan_meier, logrank, stratify_from_fit, write_logrank,
                        write_step_plot_data, write_stratification,
                        write_survival_curve)
from .synthgen import make_prognostic_cohort, write_cohort

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ACCEPTANCE = 2
EXIT_NONCONVERGENCE = 3

CASES = ("all_selected", "exclusive_only", "hubs_only")


def _write_manifest(out: Path, command: str, params: dict) -> None:
    payload = {k: v for k, v in sorted(params.items())}
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
    manifest = {"command": command, "config": payload, "config_hash": digest,
                "version": __version__}
    with open(out / ("manifest_%s.json" % command), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_gene_list(path: Path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _write_gene_list(genes, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for g in sorted(genes):
            fh.write(str(g) + "\n")


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    expr, clin, truth = make_prognostic_cohort(
        n=args.n, p=args.p, block_size=args.block_size,
        block_weight=args.block_weight, beta_scale=args.beta_scale,
        group_shift=args.group_shift, censor_rate=args.censor_rate,
        baseline_scale=args.baseline_scale, seed=args.seed, label=args.label,
    )
    write_cohort(expr, clin, out / "expression.csv", out / "clinical.csv")
    _write_gene_list(expr.gene_ids[: args.block_size], out / "truth_block_genes.txt")
    _write_manifest(out, "synth", {
        "n": args.n, "p": args.p, "block_size": args.block_size,
        "block_weight": args.block_weight, "beta_scale": args.beta_scale,
        "group_shift": args.group_shift, "censor_rate": args.censor_rate,
        "baseline_scale": args.baseline_scale, "seed": args.seed, "label": args.label,
    })
    return EXIT_OK


def cmd_preprocess(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    expr = load_expression(args.expr, args.orientation)
    transformed = npn_transform(expr)
    filtered, reports = filter_normal(transformed, args.alpha)
    logger.info("normality filter kept %d of %d genes", filtered.n_genes, expr.n_genes)
    write_expression(filtered, out / "expression_preprocessed.csv")
    write_normality_report(reports, out / "normality_report.tsv")
    _write_manifest(out, "preprocess", {
        "expr": str(args.expr), "orientation": args.orientation,
        "alpha": args.alpha, "seed": args.seed,
    })
    return EXIT_OK


def _cohort_types(clin, scheme):
    present = []
    labels = clin.labels(scheme)
    for gt in GLIOMA_TYPES:
        if sum(1 for lab in labels if lab == gt) >= 3:
            present.append(gt)
    return present


def cmd_select(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    expr = load_expression(args.expr)
    clin = load_clinical(args.clinical)
    types = _cohort_types(clin, args.scheme)
    if not types:
        raise ValueError("no glioma type has at least 3 labeled samples under %s" % args.scheme)
    config = GlassoConfig(rho=args.rho, penalize_diagonal=not args.no_penalize_diagonal,
                          zero_epsilon=args.zero_epsilon)
    nonconverged = False
    selections = {}
    for gt in types:
        cohort = build_cohort(expr, clin, args.scheme, gt)
        S = empirical_covariance(cohort.expression)
        prec = glasso_fit(S, config, gene_ids=cohort.expression.gene_ids)
        if not prec.converged:
            nonconverged = True
            logger.warning("glasso did not converge for %s/%s", args.scheme, gt)
        net = extract_network(prec, args.zero_epsilon, args.scheme, gt)
        selected = select_variables(net)
        if len(selected) < 2:
            logger.warning("near-empty selection for %s/%s at rho=%g "
                           "(%d connected genes)", args.scheme, gt, args.rho, len(selected))
        selections[gt] = selected
        write_precision(prec, out / ("precision_%s.txt" % gt), args.zero_epsilon)
        _write_gene_list(selected, out / ("selected_%s.txt" % gt))
        if selected:
            ranking = hub_ranking(net, args.t)
            hubs = ranking.hubs()
            write_hub_ranking(ranking, out / ("hub_ranking_%s.tsv" % gt))
            _write_gene_list(hubs, out / ("hubs_%s.txt" % gt))
        else:
            _write_gene_list((), out / ("hubs_%s.txt" % gt))
        write_dot(net, out / ("network_%s.dot" % gt), hubs=_read_gene_list(out / ("hubs_%s.txt" % gt)))
        write_graphml(net, out / ("network_%s.graphml" % gt),
                      hubs=_read_gene_list(out / ("hubs_%s.txt" % gt)))
    if len(selections) >= 2:
        write_set_comparison(compare_sets({gt: selections[gt] for gt in types}),
                             out / "set_comparison_selected.tsv")
        hubsets = {gt: set(_read_gene_list(out / ("hubs_%s.txt" % gt))) for gt in types}
        write_set_comparison(compare_sets(hubsets), out / "set_comparison_hubs.tsv")
    _write_manifest(out, "select", {
        "expr": str(args.expr), "clinical": str(args.clinical), "scheme": args.scheme,
        "rho": args.rho, "t": args.t, "zero_epsilon": args.zero_epsilon,
        "penalize_diagonal": not args.no_penalize_diagonal, "seed": args.seed,
    })
    return EXIT_NONCONVERGENCE if nonconverged else EXIT_OK


def cmd_validate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    expr = load_expression(args.expr)
    select_dir = Path(args.select_dir)
    grid = tuple(args.rho_grid) if args.rho_grid else DEFAULT_RHO_GRID
    all_win = True
    found = False
    for gt in GLIOMA_TYPES:
        sel_path = select_dir / ("selected_%s.txt" % gt)
        if not sel_path.exists():
            continue
        selected = _read_gene_list(sel_path)
        if len(selected) < 2:
            logger.warning("selection for %s too small to validate", gt)
            continue
        found = True
        rho_val = choose_validation_rho(expr.restrict_genes(selected), grid)
        report = validate_subset(expr, selected, rho_val,
                                 n_random=args.n_random, seed=args.seed)
        write_validation_report(report, out / ("validation_%s.tsv" % gt))
        logger.info("%s: F_D=%.3f wins=%d/%d at rho=%g", gt, report.f_selected,
                    report.wins, report.n_random, rho_val)
        if report.wins < report.n_random:
            all_win = False
    if not found:
        raise ValueError("no usable selected_<type>.txt files in %s" % select_dir)
    _write_manifest(out, "validate", {
        "expr": str(args.expr), "select_dir": str(args.select_dir),
        "n_random": args.n_random, "rho_grid": list(grid), "seed": args.seed,
    })
    return EXIT_OK if all_win else EXIT_ACCEPTANCE


def _case_genes(select_dir: Path, case: str, types) -> set:
    selections = {gt: set(_read_gene_list(select_dir / ("selected_%s.txt" % gt)))
                  for gt in types if (select_dir / ("selected_%s.txt" % gt)).exists()}
    if not selections:
        raise ValueError("no selected_<type>.txt files in %s" % select_dir)
    if case == "all_selected":
        return set().union(*selections.values())
    if case == "exclusive_only":
        out = set()
        for gt, genes in selections.items():
            others = set().union(*(g for t, g in selections.items() if t != gt)) \
                if len(selections) > 1 else set()
            out |= genes - others
        return out
    if case == "hubs_only":
        hubs = set()
        for gt in types:
            path = select_dir / ("hubs_%s.txt" % gt)
            if path.exists():
                hubs |= set(_read_gene_list(path))
        return hubs
    raise ValueError("unknown case %r" % case)


def cmd_survival(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    expr = load_expression(args.expr)
    clin = load_clinical(args.clinical)
    cohort = build_cohort(expr, clin, args.scheme, "PanGlioma")
    types = _cohort_types(clin, args.scheme)
    genes = sorted(_case_genes(Path(args.select_dir), args.case, types))
    if not genes:
        raise ValueError("case %r selects no genes" % args.case)
    design = cohort.expression.restrict_genes(genes)
    n_events = int(cohort.clinical.event.sum())
    pmax = pmax_from_events(n_events, args.epv)
    fit = fit_with_pmax(design.values, cohort.clinical.time, cohort.clinical.event,
                        pmax, gene_ids=design.gene_ids)
    write_cox_fit(fit, out / ("coxfit_%s.tsv" % args.case))
    strat = stratify_from_fit(design.values, fit, sample_ids=design.sample_ids)
    write_stratification(strat, out / ("stratification_%s.tsv" % args.case))
    low = np.array([g == "Low" for g in strat.group])
    time = cohort.clinical.time
    event = cohort.clinical.event
    for name, mask in (("low", low), ("high", ~low)):
        curve = kaplan_meier(time[mask], event[mask])
        write_survival_curve(curve, out / ("km_%s_%s.tsv" % (name, args.case)))
        write_step_plot_data(curve, out / ("km_%s_%s_steps.tsv" % (name, args.case)))
    result = logrank(time[low], event[low], time[~low], event[~low])
    write_logrank(result, out / ("logrank_%s.tsv" % args.case))
    logger.info("case %s: pmax=%d, %d active genes, log-rank p=%.3g",
                args.case, pmax, fit.n_nonzero, result.p_value)
    _write_manifest(out, "survival_%s" % args.case, {
        "expr": str(args.expr), "clinical": str(args.clinical), "scheme": args.scheme,
        "case": args.case, "epv": args.epv, "select_dir": str(args.select_dir),
        "seed": args.seed,
    })
    return EXIT_OK if fit.converged else EXIT_NONCONVERGENCE


def cmd_report(args) -> int:
    run = Path(args.run_dir)
    out = Path(args.out) if args.out else run
    out.mkdir(parents=True, exist_ok=True)
    clin = load_clinical(args.clinical) if args.clinical else None
    lines = []
    lines.append("run summary")
    lines.append("===========")
    for gt in GLIOMA_TYPES:
        sel = run / ("selected_%s.txt" % gt)
        if sel.exists():
            n_sel = len(_read_gene_list(sel))
            hubs = run / ("hubs_%s.txt" % gt)
            n_hub = len(_read_gene_list(hubs)) if hubs.exists() else 0
            lines.append("%s: selected=%d hubs=%d" % (gt, n_sel, n_hub))
    for name in ("set_comparison_selected.tsv", "set_comparison_hubs.tsv"):
        path = run / name
        if path.exists():
            lines.append("")
            lines.append(name)
            lines.append(path.read_text(encoding="utf-8").rstrip())
    for case in CASES:
        strat_path = run / ("stratification_%s.tsv" % case)
        if not strat_path.exists():
            continue
        rows = strat_path.read_text(encoding="utf-8").splitlines()
        groups = {}
        for row in rows[2:]:
            sid, _, grp = row.split("\t")
            groups[sid] = grp
        lines.append("")
        lines.append("case %s risk-group composition" % case)
        n_low = sum(1 for g in groups.values() if g == "Low")
        lines.append("high=%d low=%d" % (len(groups) - n_low, n_low))
        if clin is not None:
            for scheme in ("WHO2016", "WHO2021"):
                labels = dict(zip(clin.sample_ids, clin.labels(scheme)))
                counts = {}
                for sid, grp in groups.items():
                    lab = labels.get(sid, "Unknown")
                    counts[(lab, grp)] = counts.get((lab, grp), 0) + 1
                for lab in sorted({k[0] for k in counts}):
                    lines.append("%s %s: high=%d low=%d"
                                 % (scheme, lab, counts.get((lab, "High"), 0),
                                    counts.get((lab, "Low"), 0)))
        lr = run / ("logrank_%s.tsv" % case)
        if lr.exists():
            lines.append("logrank: " + lr.read_text(encoding="utf-8").splitlines()[1])
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(out, "report", {"run_dir": str(args.run_dir),
                                    "clinical": str(args.clinical) if args.clinical else None,
                                    "seed": args.seed})
    return EXIT_OK


def cmd_pipeline(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rc_total = EXIT_OK

    pre = argparse.Namespace(expr=args.expr, orientation=args.orientation,
                             alpha=args.alpha, out=str(out), seed=args.seed)
    cmd_preprocess(pre)
    pre_expr = out / "expression_preprocessed.csv"

    sel = argparse.Namespace(expr=str(pre_expr), clinical=args.clinical,
                             scheme=args.scheme, rho=args.rho, t=args.t,
                             zero_epsilon=args.zero_epsilon,
                             no_penalize_diagonal=args.no_penalize_diagonal,
                             out=str(out), seed=args.seed)
    rc = cmd_select(sel)
    rc_total = rc_total or rc

    if not args.no_validate:
        val = argparse.Namespace(expr=str(pre_expr), select_dir=str(out),
                                 n_random=args.n_random, rho_grid=args.rho_grid,
                                 out=str(out), seed=args.seed)
        rc = cmd_validate(val)
        rc_total = rc_total or rc

    surv = argparse.Namespace(expr=str(pre_expr), clinical=args.clinical,
                              scheme=args.scheme, case=args.case, epv=args.epv,
                              select_dir=str(out), out=str(out), seed=args.seed)
    rc = cmd_survival(surv)
    rc_total = rc_total or rc

    rep = argparse.Namespace(run_dir=str(out), clinical=args.clinical,
                             out=str(out), seed=args.seed)
    cmd_report(rep)
    return rc_total


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netsurv",
        description="Network-based diagnostic variable selection and prognostic "
                    "survival stratification for expression cohorts.",
    )
    parser.add_argument("--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    common(p)
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--block-size", type=int, default=10)
    p.add_argument("--block-weight", type=float, default=0.5)
    p.add_argument("--beta-scale", type=float, default=1.0)
    p.add_argument("--group-shift", type=float, default=3.0)
    p.add_argument("--censor-rate", type=float, default=0.2)
    p.add_argument("--baseline-scale", type=float, default=0.01)
    p.add_argument("--label", default="Astro")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="nonparanormal transform + normality filter")
    common(p)
    p.add_argument("--expr", required=True)
    p.add_argument("--orientation", choices=("samples_by_genes", "genes_by_samples"),
                   default="samples_by_genes")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_preprocess)

    def select_opts(p):
        p.add_argument("--rho", type=float, default=0.9)
        p.add_argument("--t", type=float, default=60.0)
        p.add_argument("--zero-epsilon", type=float, default=1e-8)
        p.add_argument("--no-penalize-diagonal", action="store_true")

    p = sub.add_parser("select", help="per-type glasso networks, selection and hubs")
    common(p)
    p.add_argument("--expr", required=True)
    p.add_argument("--clinical", required=True)
    p.add_argument("--scheme", choices=("WHO2016", "WHO2021"), default="WHO2016")
    select_opts(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("validate", help="likelihood validation against random subsets")
    common(p)
    p.add_argument("--expr", required=True)
    p.add_argument("--select-dir", required=True)
    p.add_argument("--n-random", type=int, default=1000)
    p.add_argument("--rho-grid", type=float, nargs="*", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("survival", help="penalized Cox fit, stratification, KM, log-rank")
    common(p)
    p.add_argument("--expr", required=True)
    p.add_argument("--clinical", required=True)
    p.add_argument("--scheme", choices=("WHO2016", "WHO2021"), default="WHO2016")
    p.add_argument("--select-dir", required=True)
    p.add_argument("--case", choices=CASES, default="all_selected")
    p.add_argument("--epv", type=int, default=10)
    p.set_defaults(func=cmd_survival)

    p = sub.add_parser("report", help="consolidated run summary")
    common(p)
    p.add_argument("--run-dir", required=True)
    p.add_argument("--clinical", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="preprocess + select + validate + survival + report")
    common(p)
    p.add_argument("--expr", required=True)
    p.add_argument("--clinical", required=True)
    p.add_argument("--orientation", choices=("samples_by_genes", "genes_by_samples"),
                   default="samples_by_genes")
    p.add_argument("--scheme", choices=("WHO2016", "WHO2021"), default="WHO2016")
    p.add_argument("--alpha", type=float, default=0.05)
    select_opts(p)
    p.add_argument("--case", choices=CASES, default="all_selected")
    p.add_argument("--epv", type=int, default=10)
    p.add_argument("--n-random", type=int, default=1000)
    p.add_argument("--rho-grid", type=float, nargs="*", default=None)
    p.add_argument("--no-validate", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
