"""Linear classifier schemas."""
from enum import Enum
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from chaos_ld.schemas.indicators import Label

MODEL_FORMAT_VERSION = 1


class FeatureSet(str, Enum):
    """Feature recipes; values are the names stored in model files."""

    S_ONLY = "S_only"
    LOGS_ONLY = "logS_only"
    S_AND_ENERGY = "S_and_energy"
    LOGS_AND_ENERGY = "logS_and_energy"

    @property
    def uses_log(self) -> bool:
        return self in (FeatureSet.LOGS_ONLY, FeatureSet.LOGS_AND_ENERGY)

    @property
    def uses_energy(self) -> bool:
        return self in (FeatureSet.S_AND_ENERGY, FeatureSet.LOGS_AND_ENERGY)

    @property
    def n_features(self) -> int:
        return 2 if self.uses_energy else 1

    @property
    def columns(self) -> tuple[str, ...]:
        first = "log10_S" if self.uses_log else "S"
        return (first, "energy") if self.uses_energy else (first,)


class Normalization(BaseModel):
    """Per-feature z-score parameters fitted on the training set."""

    model_config = ConfigDict(frozen=True)

    mean: list[float]
    scale: list[float]

    @model_validator(mode="after")
    def _check(self) -> "Normalization":
        if len(self.mean) != len(self.scale):
            raise ValueError("mean and scale must have equal length")
        if any(s <= 0 for s in self.scale):
            raise ValueError("Normalization scales must be positive")
        return self


class TrainingInfo(BaseModel):
    """Provenance of a fitted model."""

    model_config = ConfigDict(frozen=True)

    epochs: int = Field(..., ge=1)
    lr0: float = Field(..., gt=0)
    lr_decay_steps: float = Field(default=1.0e4, gt=0)
    batch: int = Field(..., ge=1)
    seed: int = Field(..., ge=0)
    n_train: int = Field(default=0, ge=0)
    dataset_sha: Optional[str] = None


class LinearSvmModel(BaseModel):
    """Hyperplane w.x + b in normalized feature space; chaotic iff the margin is > 0."""

    model_config = ConfigDict(frozen=True)

    version: int = MODEL_FORMAT_VERSION
    kind: Literal["linear_svm"] = "linear_svm"
    recipe: FeatureSet
    w: list[float]
    b: float
    normalization: Normalization
    training: TrainingInfo

    @model_validator(mode="after")
    def _check(self) -> "LinearSvmModel":
        n = self.recipe.n_features
        if len(self.w) != n or len(self.normalization.mean) != n:
            raise ValueError(f"Recipe {self.recipe.value} expects {n} feature(s)")
        return self


class CaseAccuracy(BaseModel):
    """Accuracy of one (system, energy or K) cell."""

    case: str
    value: float
    n: int = Field(..., ge=0)
    correct: int = Field(..., ge=0)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def accuracy(self) -> float:
        return self.correct / self.n if self.n else 0.0


class Misclassified(BaseModel):
    """A test sample the classifier got wrong."""

    case: str
    q1: float
    q2: float
    margin: float
    true_label: Label


class EvalReport(BaseModel):
    """Confusion counts with per-case breakdown."""

    recipe: FeatureSet
    tp: int = Field(..., ge=0)
    tn: int = Field(..., ge=0)
    fp: int = Field(..., ge=0)
    fn: int = Field(..., ge=0)
    skipped: int = Field(default=0, ge=0)
    per_case: list[CaseAccuracy] = Field(default_factory=list)
    misclassified: list[Misclassified] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check(self) -> "EvalReport":
        if len(self.misclassified) != self.fp + self.fn:
            raise ValueError("Misclassified list must match fp + fn")
        return self

    @computed_field  # type: ignore[prop-decorator]
    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @computed_field  # type: ignore[prop-decorator]
    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0
