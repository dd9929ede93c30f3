"""
Command-line interface.

    betapress fit         --data gas.csv --response y --mean x1 --precision x1 --mean-link loglog
    betapress select      --data gas.csv --response y --mean x1 --four-way
    betapress press-plot  --data gas.csv --response y --mean x1 --out press.svg
    betapress simulate    --config table1.cfg --out results/

Exit codes: 0 success, 1 user error, 2 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

from . import __version__
from ._helpers import configure_logging, format_number
from .artifacts import dumps, fit_artifact, write_json
from .dataset import FormulaSpec, build_spec, load_dataset, parse_candidate
from .errors import ExitCode, error_response_from, exit_code_for
from .links import LinkFunction
from .params import resolve_log_level, resolve_seed, resolve_workers
from .plan import load_plan
from .plotting import press_index_plot
from .prediction import DEFAULT_FLAG_MULTIPLE, flag_components, prediction_report
from .residuals import residuals_beta_gamma
from .scoring import FitOptions, fit
from .selection import Candidate, four_way_candidates, model_selection_report
from .simulation import run_grid
from .tables import write_table

logger = logging.getLogger(__name__)


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="CSV dataset (header row, UTF-8)")
    parser.add_argument("--response", required=True, help="Response column, values in (0, 1)")
    parser.add_argument("--mean", default="", help="Comma-separated mean covariates")
    parser.add_argument("--precision", default="", help="Comma-separated precision covariates")
    parser.add_argument(
        "--mean-link", default="logit", choices=[l.value for l in (LinkFunction.LOGIT, LinkFunction.LOGLOG)]
    )
    parser.add_argument("--precision-link", default="log", choices=[LinkFunction.LOG.value])
    parser.add_argument(
        "--shrink-boundary", action="store_true",
        help="Apply (y*(n-1)+0.5)/n to responses on the boundary",
    )
    parser.add_argument("--max-iterations", type=int, default=200)
    parser.add_argument("--tolerance", type=float, default=1e-8)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betapress",
        description="Beta regression with varying dispersion and PRESS-based prediction measures.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default WARNING; INFO for simulate)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="Fit one model and report its measures")
    _add_model_args(p_fit)
    p_fit.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p_fit.add_argument("--out", help="Write a JSON fit artifact to this path")
    p_fit.add_argument("--loo", action="store_true", help="Also compute the raw leave-one-out error")
    p_fit.add_argument("--workers", type=int, default=None)

    p_sel = sub.add_parser("select", help="Compare candidate models")
    _add_model_args(p_sel)
    p_sel.add_argument(
        "--four-way", action="store_true",
        help="logit/loglog mean link x fixed/varying dispersion on the --mean covariates",
    )
    p_sel.add_argument(
        "--candidate", action="append", default=[],
        help='Extra candidate: "name=m1;mean=a,b;precision=c;link=loglog" (repeatable)',
    )
    p_sel.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p_sel.add_argument("--out", help="Also write the ranked table as CSV")

    p_plot = sub.add_parser("press-plot", help="Index plots of PRESS components")
    _add_model_args(p_plot)
    p_plot.add_argument("--out", required=True, help="SVG output path")
    p_plot.add_argument("--csv", help="Components CSV (default: next to the SVG)")
    p_plot.add_argument("--flag-multiple", type=float, default=DEFAULT_FLAG_MULTIPLE)

    p_sim = sub.add_parser("simulate", help="Run a Monte Carlo plan")
    p_sim.add_argument("--config", required=True, help="key = value scenario file")
    p_sim.add_argument("--out", required=True, help="Output directory")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--replications", type=int, default=None)
    p_sim.add_argument("--workers", type=int, default=None)
    return parser


def _options(args) -> FitOptions:
    return FitOptions(max_iterations=args.max_iterations, tolerance=args.tolerance)


def _formula(args) -> FormulaSpec:
    return FormulaSpec(
        response=args.response,
        mean_terms=args.mean,
        precision_terms=args.precision,
        mean_link=args.mean_link,
        precision_link=args.precision_link,
    )


def cmd_fit(args) -> int:
    formula = _formula(args)
    frame = load_dataset(args.data)
    spec = build_spec(frame, formula, shrink=args.shrink_boundary)
    options = _options(args)

    fitted = fit(spec, options)
    if not fitted.converged:
        print(f"error: fit did not converge after {fitted.iterations} iterations", file=sys.stderr)
        return ExitCode.NUMERICAL_FAILURE

    report = prediction_report(
        fitted, spec, options=options, with_loo=args.loo, workers=resolve_workers(args.workers)
    )
    residuals = residuals_beta_gamma(fitted, spec)
    artifact = fit_artifact(
        fitted, spec, report, residuals,
        extra={"dataset": str(args.data), "formula": formula.describe()},
    )
    if args.out:
        write_json(args.out, artifact)

    if args.format == "json":
        print(dumps(artifact))
    elif args.format == "csv":
        sys.stdout.write(fitted.summary_frame().to_csv(float_format="%.17g", lineterminator="\n"))
    else:
        _print_fit(formula, fitted, report)
    return ExitCode.OK


def _print_fit(formula: FormulaSpec, fitted, report) -> None:
    print(formula.describe())
    print(f"{'parameter':<28}{'estimate':>12}{'std.error':>12}{'z':>10}")
    for name, row in fitted.summary_frame().iterrows():
        print(
            f"{name:<28}{format_number(row.estimate):>12}"
            f"{format_number(row.std_error):>12}{format_number(row.z_value):>10}"
        )
    print(f"log-likelihood  {format_number(fitted.loglik, 8)}  ({fitted.iterations} iterations)")
    print(f"R2_LR    {format_number(report.r2_lr)}")
    print(f"P2       {format_number(report.p2)}")
    print(f"P2_bg    {format_number(report.p2_bg)}")
    print(f"lambda   {format_number(report.lambda_)}")
    if report.loo_press_raw is not None:
        print(f"LOO PRESS (raw)  {format_number(report.loo_press_raw)}")


def cmd_select(args) -> int:
    frame = load_dataset(args.data)
    base_formula = _formula(args)
    base = build_spec(frame, base_formula, shrink=args.shrink_boundary)

    candidates: list[Candidate] = []
    if args.four_way:
        candidates.extend(four_way_candidates(base))
    for raw in args.candidate:
        name, formula = parse_candidate(raw, args.response, LinkFunction(args.mean_link))
        candidates.append(Candidate(name, build_spec(frame, formula, shrink=args.shrink_boundary)))
    if not candidates:
        candidates.append(Candidate(base_formula.describe(), base))

    table = model_selection_report(base, candidates, _options(args))
    if args.out:
        table.to_csv(args.out, index=False, float_format="%.17g", lineterminator="\n")

    if args.format == "csv":
        sys.stdout.write(table.to_csv(index=False, float_format="%.17g", lineterminator="\n"))
    elif args.format == "json":
        print(dumps({"candidates": table.to_dict(orient="records")}))
    else:
        _print_selection(table)

    if table["failed"].all():
        print("error: every candidate failed", file=sys.stderr)
        return ExitCode.NUMERICAL_FAILURE
    return ExitCode.OK


def _print_selection(table: pd.DataFrame) -> None:
    print(f"{'rank':<6}{'candidate':<28}{'P2':>10}{'P2_bg':>10}{'R2_LR':>10}")
    for row in table.itertuples(index=False):
        mark = " *" if row.selected else ""
        print(
            f"{row.rank:<6}{row.name:<28}{format_number(row.p2):>10}"
            f"{format_number(row.p2_bg):>10}{format_number(row.r2_lr):>10}{mark}"
        )


def cmd_press_plot(args) -> int:
    frame = load_dataset(args.data)
    spec = build_spec(frame, _formula(args), shrink=args.shrink_boundary)
    fitted = fit(spec, _options(args))
    if not fitted.converged:
        print(f"error: fit did not converge after {fitted.iterations} iterations", file=sys.stderr)
        return ExitCode.NUMERICAL_FAILURE

    report = prediction_report(fitted, spec, options=_options(args))
    flagged = flag_components(report.press_components, args.flag_multiple)
    flagged_bg = flag_components(report.press_bg_components, args.flag_multiple)

    out = Path(args.out)
    press_index_plot(
        report.press_components, report.press_bg_components, flagged, flagged_bg, out,
        title=f"P2 = {format_number(report.p2)}, P2_bg = {format_number(report.p2_bg)}",
    )
    csv_path = Path(args.csv) if args.csv else out.with_suffix(".csv")
    components = pd.DataFrame(
        {
            "index": range(1, spec.n + 1),
            "press_component": report.press_components,
            "press_bg_component": report.press_bg_components,
        }
    )
    components.to_csv(csv_path, index=False, float_format="%.17g", lineterminator="\n")

    print(f"flagged (PRESS):    {', '.join(map(str, flagged)) or '-'}")
    print(f"flagged (PRESS_bg): {', '.join(map(str, flagged_bg)) or '-'}")
    return ExitCode.OK


def cmd_simulate(args) -> int:
    plan = load_plan(args.config)
    updates = {}
    if args.seed is not None or "seed" not in plan.model_fields_set:
        updates["seed"] = resolve_seed(args.seed)
    if args.replications is not None:
        updates["replications"] = args.replications
    if updates:
        plan = plan.model_copy(update=updates)
    workers = resolve_workers(args.workers if args.workers is not None else plan.workers)

    configs = plan.expand()
    results = run_grid(configs, workers)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{plan.layout}.csv"
    write_table(results, plan.layout, path)
    failed = sum(r.failed_replications for r in results)
    print(f"wrote {path} ({len(results)} cells, {failed} failed replications)")
    return ExitCode.OK


COMMANDS = {
    "fit": cmd_fit,
    "select": cmd_select,
    "press-plot": cmd_press_plot,
    "simulate": cmd_simulate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the betapress console script."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        default_level = "INFO" if args.command == "simulate" else "WARNING"
        configure_logging(resolve_log_level(args.log_level, default=default_level))
        return COMMANDS[args.command](args)
    except Exception as e:
        code = exit_code_for(e)
        payload = error_response_from(e)
        logger.debug("Command failed", exc_info=True)
        print(f"error: {payload['message']}", file=sys.stderr)
        for hint in payload.get("hints") or []:
            print(f"hint: {hint}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
