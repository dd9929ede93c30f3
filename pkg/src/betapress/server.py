"""
BetaPress MCP Server - beta regression prediction measures as tools.

Tools read local CSV files only, fit beta regressions with varying
dispersion and report P^2, P^2_bg, R^2_LR and PRESS diagnostics. Fits
are shared through the process-wide fit cache.
"""

import logging
from typing import Optional

from mcp.server.fastmcp import FastMCP

from ._helpers import TOOL_ANNOTATIONS, handle_tool_error
from .artifacts import fit_payload, to_jsonable
from .cache import get_fit_cache
from .dataset import FormulaSpec, build_spec, load_dataset, parse_candidate
from .errors import EstimationError
from .prediction import DEFAULT_FLAG_MULTIPLE, flag_components, prediction_report
from .scoring import FitOptions
from .selection import Candidate, four_way_candidates, model_selection_report

logger = logging.getLogger(__name__)

SERVER_INSTRUCTIONS = """
You are using BetaPress, a beta regression toolkit for responses in (0, 1)
(rates, proportions, fractions).

## Tools

- fit_beta_regression: fit one model from a local CSV and get estimates,
  standard errors, R2_LR, P2, P2_bg and lambda (dispersion intensity)
- compare_candidates: rank candidate models by P2 (closer to one predicts
  better); four_way=True builds logit/loglog x fixed/varying dispersion
- press_diagnostics: per-observation PRESS components and the cases with
  the most predictive difficulty
- cache_stats: fit cache statistics

Responses exactly 0 or 1 are rejected unless shrink_boundary=True.
"""


def _spec_for(
    data_path: str,
    response: str,
    mean: str,
    precision: str,
    mean_link: str,
    shrink_boundary: bool,
):
    formula = FormulaSpec(
        response=response,
        mean_terms=mean,
        precision_terms=precision,
        mean_link=mean_link,
    )
    frame = load_dataset(data_path)
    return formula, frame, build_spec(frame, formula, shrink=shrink_boundary)


def _converged_fit(spec, options: FitOptions):
    fitted = get_fit_cache().fit(spec, options)
    if not fitted.converged:
        raise EstimationError(
            f"Fit did not converge after {fitted.iterations} iterations",
            hints=["Raise max_iterations or simplify the model"],
        )
    return fitted


def create_server() -> FastMCP:
    """
    Create and configure the BetaPress MCP server.

    Returns:
        Configured FastMCP server instance with registered tools
    """
    server = FastMCP("betapress", instructions=SERVER_INSTRUCTIONS)

    @server.tool(annotations=TOOL_ANNOTATIONS)
    @handle_tool_error
    def fit_beta_regression(
        data_path: str,
        response: str,
        mean: str = "",
        precision: str = "",
        mean_link: str = "logit",
        shrink_boundary: bool = False,
        max_iterations: int = 200,
    ) -> dict:
        """
        Fit a beta regression with varying dispersion from a local CSV.

        Args:
            data_path: Path to a comma-separated UTF-8 file with a header row
            response: Response column, values strictly inside (0, 1)
            mean: Comma-separated mean-submodel covariates (intercept implied)
            precision: Comma-separated precision-submodel covariates ("" = fixed)
            mean_link: "logit" (default) or "loglog"
            shrink_boundary: Apply (y*(n-1)+0.5)/n to responses on the boundary
            max_iterations: Fisher scoring iteration limit

        Returns:
            Estimates with standard errors and the prediction measures

        Examples:
            >>> fit_beta_regression(data_path="gas.csv", response="F",
            ...                     mean="logQmax", precision="logQmax", mean_link="loglog")
        """
        options = FitOptions(max_iterations=max_iterations)
        formula, _, spec = _spec_for(data_path, response, mean, precision, mean_link, shrink_boundary)
        fitted = _converged_fit(spec, options)
        null_fit = get_fit_cache().fit(spec.null_model(), options)
        report = prediction_report(fitted, spec, null_fit=null_fit, options=options)
        return to_jsonable({
            "status": "ok",
            "formula": formula.describe(),
            "fit": fit_payload(fitted, spec),
            "prediction": report.to_dict(components=False),
        })

    @server.tool(annotations=TOOL_ANNOTATIONS)
    @handle_tool_error
    def compare_candidates(
        data_path: str,
        response: str,
        mean: str = "",
        four_way: bool = True,
        candidates: Optional[list[str]] = None,
        shrink_boundary: bool = False,
    ) -> dict:
        """
        Rank candidate models on one response by P2, then P2_bg.

        Args:
            data_path: Path to a local CSV
            response: Response column
            mean: Covariates used by the four-way candidates
            four_way: Include logit/loglog x fixed/varying dispersion candidates
            candidates: Extra candidates, each "name=m1;mean=a,b;precision=c;link=loglog"
            shrink_boundary: Apply the boundary transform

        Returns:
            Ranked rows; the best competitive one has selected=true
        """
        formula, frame, base = _spec_for(data_path, response, mean, "", "logit", shrink_boundary)
        pool: list[Candidate] = four_way_candidates(base) if four_way else []
        for raw in candidates or []:
            name, cand_formula = parse_candidate(raw, response)
            pool.append(Candidate(name, build_spec(frame, cand_formula, shrink=shrink_boundary)))
        if not pool:
            pool.append(Candidate(formula.describe(), base))

        table = model_selection_report(base, pool, cache=get_fit_cache())
        return to_jsonable({
            "status": "ok",
            "candidates": table.to_dict(orient="records"),
        })

    @server.tool(annotations=TOOL_ANNOTATIONS)
    @handle_tool_error
    def press_diagnostics(
        data_path: str,
        response: str,
        mean: str = "",
        precision: str = "",
        mean_link: str = "logit",
        flag_multiple: float = DEFAULT_FLAG_MULTIPLE,
        shrink_boundary: bool = False,
    ) -> dict:
        """
        Per-observation PRESS components and flagged observations.

        An observation is flagged when its component exceeds flag_multiple
        times the mean component. Indices are 1-based.

        Returns:
            Components of both PRESS variants, leverages and flagged indices
        """
        options = FitOptions()
        _, _, spec = _spec_for(data_path, response, mean, precision, mean_link, shrink_boundary)
        fitted = _converged_fit(spec, options)
        null_fit = get_fit_cache().fit(spec.null_model(), options)
        report = prediction_report(fitted, spec, null_fit=null_fit, options=options)
        return to_jsonable({
            "status": "ok",
            "p2": report.p2,
            "p2_bg": report.p2_bg,
            "press_components": report.press_components,
            "press_bg_components": report.press_bg_components,
            "h_star_diag": report.h_star_diag,
            "flagged_press": flag_components(report.press_components, flag_multiple),
            "flagged_press_bg": flag_components(report.press_bg_components, flag_multiple),
        })

    @server.tool(annotations=TOOL_ANNOTATIONS)
    def cache_stats() -> dict:
        """Fit cache statistics: entries, hits, misses and hit rate."""
        return {"status": "ok", **get_fit_cache().stats()}

    logger.info("BetaPress MCP server created")
    return server
