"""
CSV datasets and formulas.

A FormulaSpec names the response column and the covariate columns of each
submodel; intercepts are always included. build_spec turns a DataFrame and
a formula into a ModelSpec.
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import DomainError, SpecValidationError
from .links import LinkFunction
from .model import ModelSpec, shrink_boundary
from .params import split_terms

logger = logging.getLogger(__name__)


class FormulaSpec(BaseModel):
    """Response and submodel terms of one model."""

    model_config = ConfigDict(frozen=True)

    response: str = Field(min_length=1)
    mean_terms: tuple[str, ...] = ()
    precision_terms: tuple[str, ...] = ()
    mean_link: LinkFunction = LinkFunction.LOGIT
    precision_link: LinkFunction = LinkFunction.LOG

    @field_validator("mean_terms", "precision_terms", mode="before")
    @classmethod
    def _split(cls, value):
        if value is None:
            return ()
        if isinstance(value, str):
            return tuple(split_terms(value))
        return tuple(t for t in value if t and t != "1")

    @field_validator("mean_link")
    @classmethod
    def _mean_link(cls, value: LinkFunction) -> LinkFunction:
        if not value.for_mean:
            raise ValueError(f"{value.value} is not a mean link")
        return value

    @field_validator("precision_link")
    @classmethod
    def _precision_link(cls, value: LinkFunction) -> LinkFunction:
        if not value.for_precision:
            raise ValueError(f"{value.value} is not a precision link")
        return value

    def describe(self) -> str:
        mean = " + ".join(("1",) + self.mean_terms)
        prec = " + ".join(("1",) + self.precision_terms)
        return (
            f"{self.mean_link.value}(mu) ~ {mean} | "
            f"{self.precision_link.value}(phi) ~ {prec}"
        )


def load_dataset(path) -> pd.DataFrame:
    """
    Read a comma-separated, UTF-8 dataset with a header row.

    Raises:
        OSError: If the file cannot be read
        SpecValidationError: If it cannot be parsed or is empty
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Dataset not found: {path}")
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise SpecValidationError(f"Cannot parse {path}: {e}") from e
    if frame.empty:
        raise SpecValidationError(f"Dataset {path} has no rows")
    logger.debug(f"Loaded {len(frame)} rows x {frame.shape[1]} columns from {path}")
    return frame


def _numeric_columns(frame: pd.DataFrame, names: tuple[str, ...], role: str) -> np.ndarray:
    missing = [name for name in names if name not in frame.columns]
    if missing:
        raise SpecValidationError(
            f"Unknown {role} column(s): {', '.join(missing)}",
            hints=[f"Available columns: {', '.join(map(str, frame.columns))}"],
        )
    block = frame.loc[:, list(names)]
    non_numeric = [c for c in names if not pd.api.types.is_numeric_dtype(block[c])]
    if non_numeric:
        raise SpecValidationError(
            f"Non-numeric {role} column(s): {', '.join(non_numeric)}",
            hints=["Only numeric covariates are supported"],
        )
    return block.to_numpy(dtype=float)


def build_spec(
    frame: pd.DataFrame,
    formula: FormulaSpec,
    shrink: bool = False,
) -> ModelSpec:
    """
    ModelSpec for a formula on a dataset.

    Raises:
        SpecValidationError: Unknown or non-numeric columns
        DomainError: Responses on the boundary without shrink, naming the row
    """
    y = _numeric_columns(frame, (formula.response,), "response")[:, 0]
    if shrink:
        y = shrink_boundary(y)
    else:
        bad = np.flatnonzero(~((y > 0.0) & (y < 1.0)))
        if bad.size:
            row = int(bad[0]) + 1
            raise DomainError(
                f"Response '{formula.response}' outside (0, 1) at row {row} (y = {y[row - 1]!r})",
                hints=["Pass --shrink-boundary to apply (y*(n-1)+0.5)/n"],
                row=row,
            )

    n = y.shape[0]
    ones = np.ones((n, 1))
    X = np.hstack([ones, _numeric_columns(frame, formula.mean_terms, "mean")]) if formula.mean_terms else ones
    Z = (
        np.hstack([ones, _numeric_columns(frame, formula.precision_terms, "precision")])
        if formula.precision_terms
        else ones
    )
    return ModelSpec(
        y=y,
        X=X,
        Z=Z,
        mean_link=formula.mean_link,
        precision_link=formula.precision_link,
        mean_names=("(Intercept)",) + formula.mean_terms,
        precision_names=("(Intercept)",) + formula.precision_terms,
    )


def parse_candidate(raw: str, response: str, default_link: Optional[LinkFunction] = None) -> tuple[str, FormulaSpec]:
    """
    Parse "name=...;mean=a,b;precision=c;link=loglog" into a named formula.

    Raises:
        SpecValidationError: On unknown fields or malformed text

    Example:
        >>> name, f = parse_candidate("name=m1;mean=x1,x2;link=loglog", "y")
        >>> name, f.mean_terms, f.mean_link.value
        ('m1', ('x1', 'x2'), 'loglog')
    """
    fields = {}
    for part in raw.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise SpecValidationError(f"Malformed candidate field {part!r}; expected key=value")
        key, value = (p.strip() for p in part.split("=", 1))
        if key not in ("name", "mean", "precision", "link"):
            raise SpecValidationError(
                f"Unknown candidate field {key!r}",
                hints=["Fields: name, mean, precision, link"],
            )
        fields[key] = value

    link = fields.get("link") or (default_link.value if default_link else LinkFunction.LOGIT.value)
    try:
        formula = FormulaSpec(
            response=response,
            mean_terms=fields.get("mean"),
            precision_terms=fields.get("precision"),
            mean_link=link,
        )
    except ValueError as e:
        raise SpecValidationError(f"Invalid candidate {raw!r}: {e}") from e
    return fields.get("name") or formula.describe(), formula
