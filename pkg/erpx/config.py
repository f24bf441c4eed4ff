"""
Global Configuration Management.
Pydantic settings validate and cast every algorithm knob. Values come, in
increasing priority, from the defaults below, `ERPX_*` environment variables,
an optional dotenv-style config file (`key=value` lines, with or without the
`ERPX_` prefix) and finally the command-line flags.
"""
import os
import re
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Optional

import orjson
from dotenv import dotenv_values
from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigError
from .schemas import BaseKind, BaseRegressorSpec, ForestParams, LambdaRule, LassoParams
from .utils import content_hash


class ImprovementRule(str, Enum):
    """How the improvement test quantifies over partner groups."""
    EXISTS = "exists"
    FORALL = "forall"


class GroupingMode(str, Enum):
    NONE = "none"
    NAME = "name"
    CLUSTER = "cluster"


class Design(str, Enum):
    LINEAR = "linear"
    MIXTURE = "mixture"


class NoiseLevel(str, Enum):
    NONE = "none"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def multiplier(self) -> float:
        return {"none": 0.0, "medium": 3.0, "high": 5.0}[self.value]


_ENV_PREFIX = "ERPX_"


def _default_threads() -> int:
    return os.cpu_count() or 1


class Settings(BaseSettings):
    """
    Algorithm and runtime settings.

    Unknown keys are rejected (`extra="forbid"`), so a typo in a config file
    fails loudly instead of silently running with a default.
    """
    # Formation
    alpha: Annotated[float, Field(gt=0, lt=1)] = 0.05
    null_permutations: Annotated[int, Field(ge=1)] = 1
    improvement_rule: ImprovementRule = ImprovementRule.EXISTS
    quantile_method: str = "linear"

    # Lasso
    n_folds: Annotated[int, Field(ge=2)] = 5
    path_length: Annotated[int, Field(ge=2)] = 100
    lambda_ratio: Annotated[float, Field(gt=0, lt=1)] = 1e-4
    lambda_rule: LambdaRule = LambdaRule.ONE_SE
    convergence_tol: Annotated[float, Field(gt=0)] = 1e-7
    max_iters: Annotated[int, Field(ge=1)] = 10_000

    # Random forest
    n_trees_formation: Annotated[int, Field(ge=1)] = 250
    n_trees_final: Annotated[int, Field(ge=1)] = 1000
    mtry_fraction: Annotated[float, Field(gt=0, le=1)] = 1.0 / 3.0
    min_node_size: Annotated[int, Field(ge=1)] = 5

    # Runtime
    seed: Annotated[int, Field(ge=0, lt=2**64)] = 0
    threads: int = Field(default_factory=_default_threads, ge=1)
    cv_repetitions: Annotated[int, Field(ge=1)] = 20
    log_level: str = "INFO"
    ledger_url: Optional[str] = None

    model_config = SettingsConfigDict(env_prefix=_ENV_PREFIX, extra="forbid")

    @field_validator("quantile_method")
    @classmethod
    def _known_quantile_method(cls, value: str) -> str:
        allowed = {
            "inverted_cdf", "averaged_inverted_cdf", "closest_observation",
            "interpolated_inverted_cdf", "hazen", "weibull", "linear",
            "median_unbiased", "normal_unbiased", "lower", "higher", "midpoint", "nearest",
        }
        if value not in allowed:
            raise ValueError(f"unknown quantile method '{value}'")
        return value

    def regressor_spec(self, kind: BaseKind | str) -> BaseRegressorSpec:
        """Builds the BaseRegressorSpec for `kind` from these settings."""
        return BaseRegressorSpec(
            kind=BaseKind(kind),
            lasso=LassoParams(
                n_folds=self.n_folds, path_length=self.path_length,
                lambda_ratio=self.lambda_ratio, lambda_rule=self.lambda_rule,
                convergence_tol=self.convergence_tol, max_iters=self.max_iters,
            ),
            forest=ForestParams(
                n_trees_formation=self.n_trees_formation, n_trees_final=self.n_trees_final,
                mtry_fraction=self.mtry_fraction, min_node_size=self.min_node_size,
            ),
        )


_CLUSTER_RE = re.compile(r"^cluster:(\d+)$")

# Fields that change how a run executes but not what it computes.
RUNTIME_ONLY = {"threads", "out_dir", "log_level", "ledger_url", "model"}


class RunConfig(Settings):
    """
    Settings plus the parameters of one CLI invocation.

    `groups` is `none`, `name` or `cluster:<d>`; use `grouping_mode` and
    `grouping_target` for the parsed form.
    """
    data: Optional[Path] = None
    response: Optional[str] = None
    base: BaseKind = BaseKind.LASSO
    groups: str = "none"
    reps: Annotated[int, Field(ge=1)] = 3
    out_dir: Path = Path("erpx-out")
    exclude_rows: list[int] = []
    design: Optional[Design] = None
    noise: NoiseLevel = NoiseLevel.NONE
    n_train: Optional[Annotated[int, Field(ge=2)]] = None
    n_signals: Annotated[int, Field(ge=1)] = 10
    replicates: Annotated[int, Field(ge=1)] = 1
    name_pattern: str = r"\d+"
    log_offset: Optional[float] = None
    top_variance: Optional[Annotated[int, Field(ge=1)]] = None
    model: Optional[Path] = None

    @field_validator("groups")
    @classmethod
    def _grouping_syntax(cls, value: str) -> str:
        value = value.strip().lower()
        if value in ("none", "name"):
            return value
        match = _CLUSTER_RE.match(value)
        if not match or int(match.group(1)) < 1:
            raise ValueError("groups must be 'none', 'name' or 'cluster:<d>' with d >= 1")
        return value

    @property
    def grouping_mode(self) -> GroupingMode:
        return GroupingMode(self.groups.split(":")[0])

    @property
    def grouping_target(self) -> Optional[int]:
        match = _CLUSTER_RE.match(self.groups)
        return int(match.group(1)) if match else None

    def config_hash(self) -> str:
        """Hash of everything that influences results (runtime-only fields excluded)."""
        payload = self.model_dump(mode="json", exclude=RUNTIME_ONLY)
        return content_hash(sorted(payload.items()))[:16]


def read_config_file(path: Path) -> dict[str, Any]:
    """
    Field values from a dotenv-style file.

    `alpha=0.1` and `ERPX_ALPHA=0.1` name the same field; keys are case
    insensitive. Values that look like JSON lists or objects are decoded,
    the rest stay strings for pydantic to cast.
    """
    values: dict[str, Any] = {}
    for key, raw in dotenv_values(path).items():
        name = key.strip().lower()
        name = name[len(_ENV_PREFIX):] if name.startswith(_ENV_PREFIX.lower()) else name
        if raw is None:
            raise ConfigError(f"config file {path}: '{key}' has no value")
        if raw.lstrip().startswith(("[", "{")):
            try:
                values[name] = orjson.loads(raw)
            except orjson.JSONDecodeError as exc:
                raise ConfigError(f"config file {path}: '{key}' is not valid JSON") from exc
        else:
            values[name] = raw
    return values


def load_run_config(config_file: Optional[Path] = None, **overrides: Any) -> RunConfig:
    """
    Builds and validates a RunConfig.

    `overrides` (the CLI flags) win over the config file, which wins over the
    environment. Flags left at None are not passed, so they do not mask the
    file.
    """
    if config_file is not None and not Path(config_file).is_file():
        raise ConfigError(f"config file not found: {config_file}")
    values = read_config_file(Path(config_file)) if config_file is not None else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"invalid configuration: {problems}") from exc

