"""
Simulation plans read from flat key = value config files.

Example file:

    # Scenario 4 of the omitted-covariates design, three precisions
    layout = table1
    scenario = 4
    n = 40
    mu_range = mid
    phi = 50, 150, 400
    replications = 2000
    seed = 20140101

Comma-separated values expand into a grid (cartesian product) of
ScenarioConfig cells.
"""

import itertools
import logging
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigurationError
from .links import LinkFunction
from .params import DEFAULT_SEED
from .simulation import ScenarioConfig

logger = logging.getLogger(__name__)

LIST_KEYS = {"scenario", "n", "mu_range", "phi", "lambda", "covariate_law"}
SCALAR_KEYS = {
    "layout", "replications", "seed", "replicate_covariate_block", "block_size",
    "base_precision", "workers", "mean_link",
    "true_mean_covariates", "true_precision_covariates",
    "estimated_mean_covariates", "estimated_precision_covariates",
}
KNOWN_KEYS = LIST_KEYS | SCALAR_KEYS

DEFAULT_PHI = (50.0, 150.0, 400.0)
DEFAULT_LAMBDA = (20.0, 50.0, 100.0)

LAYOUT_SCENARIOS = {
    "table1": (1, 2, 3, 4),
    "table2": (5, 6, 7, 8),
    "table3": (5, 6, 7, 8),
}


def scenario_counts(layout: str, scenario: int) -> dict:
    """
    Covariate counts of a named scenario.

    table1: four true mean slopes, fixed precision, the first `scenario`
    slopes estimated. table2: `scenario - 4` slopes in both submodels,
    correctly specified. table3: same truth as table2, fixed precision
    estimated.

    Raises:
        ConfigurationError: If the scenario does not belong to the layout
    """
    if layout not in LAYOUT_SCENARIOS or scenario not in LAYOUT_SCENARIOS[layout]:
        allowed = LAYOUT_SCENARIOS.get(layout)
        raise ConfigurationError(
            f"Scenario {scenario} is not part of layout {layout!r}",
            key="scenario",
            hints=[f"Layout {layout!r} has scenarios {allowed}"] if allowed else None,
        )
    if layout == "table1":
        return {
            "true_mean_covariates": 4, "true_precision_covariates": 0,
            "estimated_mean_covariates": scenario, "estimated_precision_covariates": 0,
        }
    m = scenario - 4
    return {
        "true_mean_covariates": m, "true_precision_covariates": m,
        "estimated_mean_covariates": m,
        "estimated_precision_covariates": m if layout == "table2" else 0,
    }


class SimulationPlan(BaseModel):
    """A grid of scenario cells sharing replication settings."""

    layout: Literal["table1", "table2", "table3", "custom"] = "custom"
    scenario: list[int] = Field(default_factory=list)
    n: list[int] = Field(default_factory=lambda: [40])
    mu_range: list[Literal["low", "mid", "high"]] = Field(default_factory=lambda: ["mid"])
    phi: list[float] = Field(default_factory=list)
    lambda_: list[float] = Field(default_factory=list, alias="lambda")
    covariate_law: list[Literal["uniform01", "uniform_half", "student_t3"]] = Field(
        default_factory=lambda: ["uniform01"]
    )
    replications: int = Field(default=100, ge=1)
    seed: int = DEFAULT_SEED
    # None tiles the block for the varying-dispersion layouts only
    replicate_covariate_block: Optional[bool] = None
    block_size: int = Field(default=40, ge=2)
    base_precision: float = Field(default=50.0, gt=0.0)
    workers: Optional[int] = Field(default=None, ge=1)
    mean_link: LinkFunction = LinkFunction.LOGIT
    true_mean_covariates: Optional[int] = None
    true_precision_covariates: Optional[int] = None
    estimated_mean_covariates: Optional[int] = None
    estimated_precision_covariates: Optional[int] = None

    model_config = ConfigDict(populate_by_name=True)

    @model_validator(mode="after")
    def _check_layout(self) -> "SimulationPlan":
        if self.layout != "custom" and not self.scenario:
            self.scenario = list(LAYOUT_SCENARIOS[self.layout])
        if self.layout == "table1" and self.lambda_:
            raise ValueError("layout table1 uses fixed phi, not lambda")
        if self.layout in ("table2", "table3") and self.phi:
            raise ValueError(f"layout {self.layout} uses lambda, not phi")
        return self

    @property
    def tiles_covariate_block(self) -> bool:
        if self.replicate_covariate_block is None:
            return self.layout in ("table2", "table3")
        return self.replicate_covariate_block

    def _dispersions(self) -> list[dict]:
        phi = self.phi
        lam = self.lambda_
        if not phi and not lam:
            if self.layout == "table1":
                phi = list(DEFAULT_PHI)
            elif self.layout in ("table2", "table3"):
                lam = list(DEFAULT_LAMBDA)
            elif (self.true_precision_covariates or 0) > 0:
                lam = list(DEFAULT_LAMBDA)
            else:
                phi = list(DEFAULT_PHI)
        return [{"phi": v} for v in phi] + [{"lambda": v} for v in lam]

    def _counts(self) -> list[tuple[Optional[int], dict]]:
        if self.layout == "custom":
            counts = {
                key: getattr(self, key)
                for key in (
                    "true_mean_covariates", "true_precision_covariates",
                    "estimated_mean_covariates", "estimated_precision_covariates",
                )
                if getattr(self, key) is not None
            }
            scenarios = self.scenario or [None]
            return [(s, counts) for s in scenarios]
        return [(s, scenario_counts(self.layout, s)) for s in self.scenario]

    def expand(self) -> list[ScenarioConfig]:
        """
        Cartesian product of the list-valued keys, in a fixed order.

        Raises:
            ConfigurationError: If a cell is invalid
        """
        configs = []
        for (scenario, counts), mu_range, law, n, dispersion in itertools.product(
            self._counts(), self.mu_range, self.covariate_law, self.n, self._dispersions()
        ):
            values = {
                "layout": self.layout,
                "scenario": scenario,
                "n": n,
                "mu_range": mu_range,
                "covariate_law": law,
                "replications": self.replications,
                "seed": self.seed,
                "replicate_covariate_block": self.tiles_covariate_block,
                "block_size": self.block_size,
                "base_precision": self.base_precision,
                "mean_link": self.mean_link,
                **counts,
                **dispersion,
            }
            configs.append(ScenarioConfig.from_mapping(values))
        return configs


def _parse_bool(raw: str, key: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"Config key {key!r} expects a boolean, got {raw!r}", key=key)


def parse_config_text(text: str) -> dict:
    """
    Parse flat key = value text into a mapping.

    Raises:
        ConfigurationError: On malformed lines, duplicate or unknown keys

    Examples:
        >>> parse_config_text("n = 40, 80\\nphi = 50  # fixed")
        {'n': ['40', '80'], 'phi': ['50']}
    """
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"Line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigurationError(
                f"Unknown config key {key!r} (line {lineno})",
                key=key,
                hints=[f"Known keys: {', '.join(sorted(KNOWN_KEYS))}"],
            )
        if key in values:
            raise ConfigurationError(f"Duplicate config key {key!r} (line {lineno})", key=key)
        if key in LIST_KEYS:
            values[key] = [v.strip() for v in raw.split(",") if v.strip()]
        elif key == "replicate_covariate_block":
            values[key] = _parse_bool(raw, key)
        else:
            values[key] = raw
    return values


def plan_from_mapping(values: dict) -> SimulationPlan:
    """
    Raises:
        ConfigurationError: Naming the first invalid key
    """
    try:
        return SimulationPlan.model_validate(values)
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first["loc"][0]) if first.get("loc") else None
        raise ConfigurationError(
            f"Invalid config{f' key {key!r}' if key else ''}: {first['msg']}",
            key=key,
        ) from e


def load_plan(path) -> SimulationPlan:
    """
    Read and validate a config file.

    Raises:
        OSError: If the file cannot be read
        ConfigurationError: If the contents are invalid
    """
    text = Path(path).read_text(encoding="utf-8")
    plan = plan_from_mapping(parse_config_text(text))
    logger.debug(f"Loaded plan from {path}: layout={plan.layout}")
    return plan
