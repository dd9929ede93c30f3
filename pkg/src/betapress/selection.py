"""
Comparison of candidate models on a common response.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from .cache import FitCache, get_fit_cache
from .errors import BetaPressError, SpecValidationError
from .links import LinkFunction
from .model import ModelSpec
from .prediction import prediction_report
from .ranking import rank_candidates
from .scoring import FitOptions

logger = logging.getLogger(__name__)

SELECTION_COLUMNS = [
    "rank", "name", "mean_link", "k", "q", "p2", "p2_bg", "r2_lr",
    "lambda", "loglik", "converged", "failed", "selected", "error",
]


@dataclass(frozen=True)
class Candidate:
    name: str
    spec: ModelSpec


def four_way_candidates(spec: ModelSpec) -> list[Candidate]:
    """
    logit and loglog mean links, each with fixed and with varying dispersion.

    The varying-dispersion variants reuse the mean covariates in the
    precision submodel.
    """
    candidates = []
    for link in (LinkFunction.LOGIT, LinkFunction.LOGLOG):
        base = replace(spec, mean_link=link)
        candidates.append(Candidate(f"{link.value}+fixed", base.with_fixed_dispersion()))
        candidates.append(
            Candidate(
                f"{link.value}+log",
                replace(base, Z=spec.X, precision_names=spec.mean_names),
            )
        )
    return candidates


def _as_candidates(candidates: Sequence[Union[Candidate, ModelSpec]]) -> list[Candidate]:
    out = []
    for i, cand in enumerate(candidates, start=1):
        out.append(cand if isinstance(cand, Candidate) else Candidate(f"model{i}", cand))
    return out


def model_selection_report(
    spec: ModelSpec,
    candidates: Sequence[Union[Candidate, ModelSpec]],
    options: Optional[FitOptions] = None,
    cache: Optional[FitCache] = None,
) -> pd.DataFrame:
    """
    Fit every candidate and rank them by P^2.

    A candidate whose fit or measures fail is kept as a non-competitive row
    with its error message. The null model for R^2_LR is fitted once.

    Raises:
        SpecValidationError: If no candidates are given or a candidate's
            response differs from spec's
    """
    candidates = _as_candidates(candidates)
    if not candidates:
        raise SpecValidationError("At least one candidate model is required")
    for cand in candidates:
        if cand.spec.n != spec.n or not np.array_equal(cand.spec.y, spec.y):
            raise SpecValidationError(
                f"Candidate '{cand.name}' does not share the response",
                hints=["All candidates must be fitted to the same y"],
            )

    options = options or FitOptions()
    cache = cache or get_fit_cache()
    null_fit = cache.fit(spec.null_model(), options)

    rows = []
    for cand in candidates:
        row = {
            "name": cand.name,
            "mean_link": cand.spec.mean_link.value,
            "k": cand.spec.k,
            "q": cand.spec.q,
            "p2": None, "p2_bg": None, "r2_lr": None, "lambda": None,
            "loglik": None, "converged": False, "failed": True, "error": None,
        }
        try:
            fitted = cache.fit(cand.spec, options)
            row["loglik"] = fitted.loglik
            row["converged"] = fitted.converged
            if not fitted.converged:
                raise BetaPressError(f"fit did not converge in {fitted.iterations} iterations")
            report = prediction_report(fitted, cand.spec, null_fit=null_fit, options=options)
            row.update(
                p2=report.p2, p2_bg=report.p2_bg, r2_lr=report.r2_lr,
                failed=False,
            )
            row["lambda"] = report.lambda_
        except (BetaPressError, ValueError, ArithmeticError) as e:
            logger.warning(f"Candidate '{cand.name}' is not competitive: {e}")
            row["error"] = str(e)
        rows.append(row)

    ranked = rank_candidates(rows)
    return pd.DataFrame(ranked, columns=SELECTION_COLUMNS)
