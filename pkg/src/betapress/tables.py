"""
CSV tables of Monte Carlo results.

Rows are (mu_range, n, covariate_law, statistic); columns are one per
(scenario, dispersion) cell plus a matching "_se" column with the Monte
Carlo standard error. Cells absent from the results are written as NA.
"""

from typing import Sequence

import pandas as pd

from .errors import ConfigurationError
from .plan import LAYOUT_SCENARIOS
from .simulation import MU_RANGES, ScenarioResult

LAYOUTS = ("table1", "table2", "table3", "custom")
MISSING = "NA"

_STAT_LABELS = {"p2": "P2", "p2_bg": "P2_bg", "r2_lr": "R2_LR"}
HIGH_LEVERAGE = "high_leverage"
_LAW_ORDER = {"uniform01": 0, "uniform_half": 1, "student_t3": 2}


def _column_sort_key(config) -> tuple:
    scenario = config.scenario if config.scenario is not None else -1
    dispersion = config.phi if config.phi is not None else config.lambda_
    return (
        scenario,
        config.estimated_mean_covariates,
        config.estimated_precision_covariates,
        0 if config.phi is not None else 1,
        dispersion,
    )


def results_frame(results: Sequence[ScenarioResult], layout: str = "custom") -> pd.DataFrame:
    """
    Results as a wide DataFrame in table layout.

    A named layout only accepts cells of its own scenarios; "custom" takes
    any cell.

    Raises:
        ConfigurationError: If layout is unknown or a cell does not belong to it
    """
    if layout not in LAYOUTS:
        raise ConfigurationError(
            f"Unknown table layout {layout!r}",
            key="layout",
            hints=[f"Use one of: {', '.join(LAYOUTS)}"],
        )
    allowed = LAYOUT_SCENARIOS.get(layout)
    if allowed is not None:
        strays = sorted({r.config.column_label for r in results if r.config.scenario not in allowed})
        if strays:
            raise ConfigurationError(
                f"Cells {strays} are not part of layout {layout!r}",
                key="layout",
                hints=[f"Layout {layout!r} has scenarios {allowed}; use layout custom for other cells"],
            )

    columns = {}
    for res in sorted(results, key=lambda r: _column_sort_key(r.config)):
        columns.setdefault(res.config.column_label, None)

    records = {}
    for res in results:
        cfg = res.config
        for i, stat in enumerate(("p2", "p2_bg", "r2_lr")):
            row_key = (cfg.mu_range, cfg.n, cfg.covariate_law, _STAT_LABELS[stat])
            row = records.setdefault(row_key, {})
            row[cfg.column_label] = res.means[i]
            row[f"{cfg.column_label}_se"] = res.mc_standard_errors[i]
        if res.mean_high_leverage is not None:
            row = records.setdefault((cfg.mu_range, cfg.n, cfg.covariate_law, HIGH_LEVERAGE), {})
            row[cfg.column_label] = res.mean_high_leverage

    ordered_cols = []
    for label in columns:
        ordered_cols.extend([label, f"{label}_se"])

    def row_sort(key):
        mu_range, n, law, stat = key
        return (
            list(MU_RANGES).index(mu_range),
            _LAW_ORDER.get(law, 99),
            n,
            [*_STAT_LABELS.values(), HIGH_LEVERAGE].index(stat),
        )

    index = sorted(records, key=row_sort)
    frame = pd.DataFrame(
        [[records[key].get(col) for col in ordered_cols] for key in index],
        columns=ordered_cols,
        index=pd.MultiIndex.from_tuples(index, names=["mu_range", "n", "covariate_law", "statistic"]),
        dtype=float,
    )
    return frame


def emit_table(results: Sequence[ScenarioResult], layout: str = "custom") -> str:
    """
    Render results as CSV text with full-precision numbers.

    Examples:
        >>> csv = emit_table(results, "table1")   # doctest: +SKIP
        >>> csv.splitlines()[0]                   # doctest: +SKIP
        'mu_range,n,covariate_law,statistic,scenario1_phi50,scenario1_phi50_se,...'
    """
    frame = results_frame(results, layout)
    return frame.to_csv(float_format="%.17g", na_rep=MISSING, lineterminator="\n")


def write_table(results: Sequence[ScenarioResult], layout: str, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(emit_table(results, layout))
