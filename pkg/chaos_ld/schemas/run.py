"""Per-command run configurations.

Each command loads its config from an optional JSON file, applies the flags that
were given on the command line, and echoes the result as ``<command>.config.json``.
"""
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from chaos_ld.exceptions import ConfigurationError
from chaos_ld.presets import FOUR_WELL_CASES, four_well_case
from chaos_ld.schemas.svm import FeatureSet
from chaos_ld.schemas.system import PARAM_NAMES, SystemKind, SystemSpec


class RunConfig(BaseModel):
    """Fields shared by every command."""

    model_config = ConfigDict(extra="forbid")

    output_dir: Optional[Path] = None
    seed: int = Field(default=0, ge=0, le=2**64 - 1)


class SystemOptions(BaseModel):
    """System selection as given on the command line."""

    model_config = ConfigDict(extra="forbid")

    system: SystemKind
    alpha: Optional[float] = None
    sigma: Optional[float] = None
    beta: Optional[float] = None
    delta: Optional[float] = None
    K: list[float] = Field(default_factory=list)
    case: Optional[int] = None

    @model_validator(mode="after")
    def _check_case(self) -> "SystemOptions":
        if self.case is not None:
            if self.system is not SystemKind.FOUR_WELL:
                raise ValueError("--case selects a four-well parameter set")
            if self.case not in FOUR_WELL_CASES:
                raise ValueError(f"Four-well case must be one of {sorted(FOUR_WELL_CASES)}")
        return self

    def to_system(self, k_index: int = 0) -> SystemSpec:
        if self.system is SystemKind.FOUR_WELL and self.case is not None:
            return four_well_case(self.case)
        if self.system is SystemKind.STANDARD_MAP:
            if not self.K:
                raise ConfigurationError("The standard map needs --K")
            return SystemSpec.standard_map(self.K[k_index])
        values = {
            "alpha": self.alpha, "sigma": self.sigma, "beta": self.beta, "delta": self.delta
        }
        params = {
            name: values[name] for name in PARAM_NAMES[self.system] if values[name] is not None
        }
        return SystemSpec(kind=self.system, params=params)


class GenerateConfig(RunConfig, SystemOptions):
    """``generate``: sample, propagate and label an ensemble."""

    energy: list[float] = Field(default_factory=list)
    relative_energies: bool = False
    n: int = Field(default=1000, ge=1)
    iters: Optional[int] = Field(default=None, ge=1)
    tau: Optional[float] = Field(default=None, gt=0)
    t_sali: Optional[float] = Field(default=None, gt=0)
    threshold: Optional[float] = None
    stencil_sigma: Optional[float] = Field(default=None, gt=0)
    name: str = "dataset"


class ThresholdConfig(RunConfig):
    """``threshold``: histogram valley of one dataset column."""

    dataset: Path
    column: str = "log10_S"
    bins: int = Field(default=100, ge=10)
    smoothing: int = Field(default=5, ge=1)
    output: Optional[str] = None

    @model_validator(mode="after")
    def _check_column(self) -> "ThresholdConfig":
        if self.column not in ("log10_S", "sali_log10"):
            raise ValueError("column must be log10_S or sali_log10")
        return self


class TrainConfig(RunConfig):
    """``train``: fit a linear classifier."""

    datasets: list[Path] = Field(..., min_length=1)
    recipe: FeatureSet = FeatureSet.LOGS_ONLY
    epochs: int = Field(default=5000, ge=1)
    lr0: float = Field(default=0.1, gt=0)
    lr_decay_steps: float = Field(default=1.0e4, gt=0)
    batch: int = Field(default=64, ge=1)
    train_fraction: float = Field(default=1.0, gt=0, le=1)
    name: Optional[str] = None


class EvaluateConfig(RunConfig):
    """``evaluate``: score a model against labeled datasets."""

    model: Path
    datasets: list[Path] = Field(..., min_length=1)
    recipe: Optional[FeatureSet] = None
    name: str = "evaluation"


class PoincareConfig(RunConfig, SystemOptions):
    """``poincare``: section crossings (or raw map iterates)."""

    energy: Optional[float] = None
    ic: list[tuple[float, float]] = Field(default_factory=list)
    n: int = Field(default=30, ge=0)
    crossings: int = Field(default=200, ge=1)
    t_max: float = Field(default=1.0e4, gt=0)
    name: str = "section"


class SaliTraceConfig(RunConfig, SystemOptions):
    """``sali-trace``: SALI time series for one orbit."""

    energy: Optional[float] = None
    ic: tuple[float, float]
    t_max: float = Field(default=1.0e4, gt=0)
    name: str = "sali"


class IndicatorTraceConfig(RunConfig, SystemOptions):
    """``indicator-trace``: D, R, C, S against the LD horizon."""

    energy: Optional[float] = None
    ic: tuple[float, float]
    taus: list[float] = Field(
        default_factory=lambda: [10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0]
    )
    stencil_sigma: Optional[float] = Field(default=None, gt=0)
    name: str = "indicators"


class LearningCurveConfig(RunConfig):
    """``learning-curve``: accuracy against training fraction."""

    train: list[Path] = Field(..., min_length=1)
    test: list[Path] = Field(..., min_length=1)
    recipes: list[FeatureSet] = Field(
        default_factory=lambda: [FeatureSet.S_ONLY, FeatureSet.S_AND_ENERGY]
    )
    fractions: list[float] = Field(default_factory=lambda: [0.01, 0.05, 0.1, 0.25, 0.5, 1.0])
    epochs: int = Field(default=1000, ge=1)
    name: str = "learning_curve"

    @model_validator(mode="after")
    def _check_fractions(self) -> "LearningCurveConfig":
        if any(not 0 < f <= 1 for f in self.fractions):
            raise ValueError("Training fractions must lie in (0, 1]")
        return self


class ReproduceConfig(RunConfig):
    """``reproduce``: desk-scale train-on-pendulum, test-elsewhere campaign."""

    n_train: int = Field(default=500, ge=1)
    n_eval: int = Field(default=1000, ge=1)
    train_energy_levels: int = Field(default=20, ge=1)
    four_well_energy_levels: int = Field(default=4, ge=1)
    t_sali: Optional[float] = Field(default=None, gt=0)
    epochs: int = Field(default=5000, ge=1)
    skip_existing: bool = True
