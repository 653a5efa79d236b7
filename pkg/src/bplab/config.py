"""Experiment configuration: YAML files validated by pydantic models.

出力先ディレクトリの優先順位:
1) CLI の ``--out``
2) 設定ファイルの ``output_dir``
3) 環境変数 ``BPLAB_OUTPUT_DIR``
4) デフォルト ``./bplab_out``
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .models import ModelKind, ModelParams
from .spectral import Grid, GridError
from .timeloop import DEFAULT_BLOWUP_THRESHOLD, DEFAULT_RESOLUTION_FRACTION, Scheme, StepperConfig

logger = logging.getLogger(__name__)

OUTPUT_ENV = "BPLAB_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "./bplab_out"

SCENARIOS = (
    "dispersion",
    "consistency",
    "longtime",
    "burgers",
    "operator-audit",
    "mollifier-study",
)


class ConfigError(Exception):
    """設定ファイルの読み込み・検証エラー"""

    pass


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSpec(_Spec):
    d: Literal[1, 2] = 1
    n: int = 256
    L: Union[float, List[float]] = Field(default=20 * np.pi)
    gamma: Union[float, Literal["sqrt_mu"]] = 1.0

    def build(self, mu: float = 0.0) -> Grid:
        gamma = self.gamma
        if gamma == "sqrt_mu":
            gamma = float(np.sqrt(mu))
        length = tuple(self.L) if isinstance(self.L, list) else float(self.L)
        return Grid(d=self.d, n=self.n, L=length, gamma=float(gamma))


class ParamsSpec(_Spec):
    eps: float = Field(default=0.0, ge=0)
    mu: float = Field(default=0.0, ge=0)
    model: ModelKind = ModelKind.BP
    rescaled_time: bool = False

    def build(self, **overrides: Any) -> ModelParams:
        values = self.model_dump()
        values.update(overrides)
        return ModelParams(**values)


class BathymetrySpec(_Spec):
    profile: str = "flat"
    beta: float = Field(default=0.0, ge=0, le=1)
    params: Dict[str, Any] = Field(default_factory=dict)

    def profile_spec(self) -> Dict[str, Any]:
        return {"name": self.profile, **self.params}


class InitialSpec(_Spec):
    shape: Literal["gaussian", "mode", "burgers_sine", "gaussian_right_going"] = "gaussian"
    amplitude: float = 1.0
    width: float = Field(default=1.0, gt=0)
    center: Optional[Union[float, List[float]]] = None
    k: float = 1.0


class StepperSpec(_Spec):
    dt: float = Field(default=1e-2, gt=0)
    t_end: float = Field(default=1.0, gt=0)
    scheme: Scheme = Scheme.RK4
    delta: float = Field(default=0.0, ge=0)
    output_stride: int = Field(default=1, ge=1)
    blowup_threshold: float = Field(default=DEFAULT_BLOWUP_THRESHOLD, gt=0)
    resolution_fraction: float = Field(default=DEFAULT_RESOLUTION_FRACTION, ge=0, le=1)

    def build(self, **overrides: Any) -> StepperConfig:
        values = self.model_dump()
        values.update(overrides)
        return StepperConfig(**values)


class SweepSpec(_Spec):
    eps: List[float] = Field(default_factory=list)
    mu: List[float] = Field(default_factory=list)
    k: List[float] = Field(default_factory=list)
    delta: List[float] = Field(default_factory=list)
    eps_equals_mu: bool = False
    periods: float = Field(default=5.0, gt=0)
    contrast_eps: Optional[float] = Field(default=None, gt=0)


class AuditSpec(_Spec):
    grids: List[GridSpec] = Field(
        default_factory=lambda: [GridSpec(d=1, n=32, L=2 * np.pi), GridSpec(d=2, n=16, L=2 * np.pi)]
    )
    trials: int = Field(default=20, ge=1)
    estimate_index: int = Field(default=1, ge=0)


class ThresholdSpec(_Spec):
    dispersion_rel_err: float = 1e-3
    audit_symmetry: float = 1e-10
    audit_inverse: float = 1e-9
    audit_dense_agreement: float = 1e-12
    audit_solver_agreement: float = 1e-9
    order_bp_sw: float = 0.9
    order_bp_mbp: float = 1.7
    longtime_growth: float = 2.0
    burgers_rel_err: float = 0.1
    burgers_slope_tol: float = 0.05
    mollifier_delta: float = 1e-3
    mollifier_max_diff: float = 1e-3


class OutputSpec(_Spec):
    snapshots: bool = False
    trajectories: bool = True


class ExperimentConfig(_Spec):
    scenario: Literal[SCENARIOS]  # type: ignore[valid-type]
    name: Optional[str] = None
    grid: GridSpec = Field(default_factory=GridSpec)
    params: ParamsSpec = Field(default_factory=ParamsSpec)
    bathymetry: BathymetrySpec = Field(default_factory=BathymetrySpec)
    initial: InitialSpec = Field(default_factory=InitialSpec)
    stepper: StepperSpec = Field(default_factory=StepperSpec)
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    audit: AuditSpec = Field(default_factory=AuditSpec)
    thresholds: ThresholdSpec = Field(default_factory=ThresholdSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)
    output_dir: Optional[str] = None
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_sweep_axes(self):
        required = {
            "dispersion": ("mu", "k"),
            "consistency": ("mu",),
            "longtime": ("eps",),
            "burgers": ("eps",),
            "mollifier-study": ("delta",),
        }.get(self.scenario, ())
        for axis in required:
            if not getattr(self.sweep, axis):
                raise ValueError(f"sweep.{axis} must be non-empty for scenario '{self.scenario}'")
        if self.scenario == "consistency" and len(self.sweep.mu) < 3:
            raise ValueError("sweep.mu needs at least 3 values for an order estimate")
        if self.scenario == "mollifier-study" and 0.0 not in self.sweep.delta:
            raise ValueError("sweep.delta must contain 0 as the reference run")
        return self

    @property
    def run_name(self) -> str:
        return self.name or self.scenario


def _format_validation_error(e: ValidationError) -> str:
    lines = []
    for err in e.errors():
        path = ".".join(str(part) for part in err.get("loc", ())) or "<root>"
        lines.append(f"{path}: {err.get('msg')}")
    return "; ".join(lines)


def parse_config(data: Any, source: str = "<memory>") -> ExperimentConfig:
    """dict から ExperimentConfig を生成する。

    Raises:
        ConfigError: 検証に失敗した場合（ドット区切りのパス + 理由）
    """
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: 設定はマッピングである必要があります")
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{source}: {_format_validation_error(e)}")
    try:
        config.grid.build(config.params.mu)
    except GridError as e:
        raise ConfigError(f"{source}: grid: {e}")
    return config


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """YAML 設定ファイルを読み込み検証する。"""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"{path}: 設定ファイルが見つかりません")
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: YAML の解析に失敗: {e}")
    except OSError as e:
        raise ConfigError(f"{path}: 読み込みに失敗: {e}")
    config = parse_config(data, source=str(path))
    logger.debug(f"config loaded: path={path} scenario={config.scenario}")
    return config


def resolve_output_dir(cli_out: Optional[str], config: Optional[ExperimentConfig] = None) -> Path:
    if cli_out:
        return Path(cli_out)
    if config is not None and config.output_dir:
        return Path(config.output_dir)
    return Path(os.getenv(OUTPUT_ENV, DEFAULT_OUTPUT_DIR))
