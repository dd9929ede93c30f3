"""
JSON artifacts of fits.

A fit artifact carries parameters, standard errors, per-observation
residuals and PRESS components and the prediction report, so downstream
tooling can work without refitting.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .model import FittedModel, ModelSpec
from .prediction import PredictionReport
from .residuals import ResidualSet

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats to plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def fit_payload(fitted: FittedModel, spec: ModelSpec) -> dict:
    """Parameters and fit metadata as a JSON-ready dict."""
    summary = fitted.summary_frame()
    return {
        "mean_link": spec.mean_link.value,
        "precision_link": spec.precision_link.value,
        "n": spec.n,
        "k": spec.k,
        "q": spec.q,
        "loglik": fitted.loglik,
        "iterations": fitted.iterations,
        "converged": fitted.converged,
        "parameters": [
            {
                "name": name,
                "estimate": row.estimate,
                "std_error": row.std_error,
                "z_value": row.z_value,
            }
            for name, row in summary.iterrows()
        ],
        "warnings": list(fitted.warnings),
    }


def fit_artifact(
    fitted: FittedModel,
    spec: ModelSpec,
    report: Optional[PredictionReport] = None,
    residuals: Optional[ResidualSet] = None,
    extra: Optional[dict] = None,
) -> dict:
    """
    Full artifact: fit, prediction report and per-observation quantities.

    Args:
        fitted: The fit
        spec: Spec it was fitted on
        report: Optional prediction report
        residuals: Optional residual set
        extra: Additional metadata (dataset path, formula, ...)
    """
    artifact = {
        "betapress_version": __version__,
        "fit": fit_payload(fitted, spec),
        **(extra or {}),
    }
    if report is not None:
        artifact["prediction"] = report.to_dict(components=True)
    if residuals is not None:
        artifact["residuals"] = residuals.to_frame().reset_index().to_dict(orient="list")
    return to_jsonable(artifact)


def write_json(path, payload: dict) -> Path:
    """
    Write a payload as UTF-8 JSON.

    Raises:
        OSError: If the file cannot be written
    """
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_jsonable(payload), f, ensure_ascii=False, indent=2, default=str)
        f.write("\n")
    logger.info(f"Wrote JSON artifact to {path}")
    return path


def dumps(payload: dict) -> str:
    return json.dumps(to_jsonable(payload), ensure_ascii=False, indent=2, default=str)
