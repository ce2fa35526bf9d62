"""Indicator schemas."""
import math
from enum import IntEnum
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from chaos_ld.schemas.system import SystemSpec


class Label(IntEnum):
    """Orbit class; the integer values are the ones written to files."""

    REGULAR = 0
    CHAOTIC = 1


class NeighborStencil(BaseModel):
    """A center and its four neighbors at +-sigma_i along each slice axis.

    Points are ordered center, (+e1), (-e1), (+e2), (-e2).
    """

    model_config = ConfigDict(frozen=True)

    center: tuple[float, float]
    sigma: tuple[float, float]
    points: list[tuple[float, float]]
    states: list[list[float]]

    @model_validator(mode="after")
    def _check(self) -> "NeighborStencil":
        if min(self.sigma) <= 0:
            raise ValueError("Stencil spacing must be positive")
        if len(self.points) != 5 or len(self.states) != 5:
            raise ValueError("A stencil has exactly five points")
        return self


class IndicatorValues(BaseModel):
    """The four neighbor-grid indicators."""

    model_config = ConfigDict(frozen=True)

    D: float = Field(..., ge=0)
    R: float = Field(..., ge=0)
    C: float = Field(..., ge=0)
    S: float = Field(..., ge=0)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return self.D, self.R, self.C, self.S


class AsymptoteFit(BaseModel):
    """Long-time behavior fitted to a SALI series."""

    regime: Literal["power_law", "exponential", "plateau"]
    power_slope: float
    exponential_rate: float
    plateau: float
    lyapunov_estimate: Optional[float] = None
    n_samples: int
    window: tuple[float, float]

    @property
    def rate(self) -> float:
        """Decay rate for an exponential regime, log-log slope otherwise."""
        return self.exponential_rate if self.regime == "exponential" else self.power_slope


class IndicatorRecord(BaseModel):
    """One labeled sample."""

    model_config = ConfigDict(frozen=True)

    system: SystemSpec
    energy: Optional[float] = None
    q1: float
    q2: float
    ld_center: float = Field(..., ge=0)
    ld_neighbors: Optional[tuple[float, float, float, float]] = None
    D: float = Field(..., ge=0)
    R: float = Field(..., ge=0)
    C: float = Field(..., ge=0)
    S: float = Field(..., ge=0)
    log10_S: Optional[float] = None
    sali_log10: float
    label: Label
    horizon: Optional[float] = None

    @model_validator(mode="before")
    @classmethod
    def _derive_log(cls, data: Any) -> Any:
        if not isinstance(data, dict) or "S" not in data:
            return data
        s_value = float(data["S"])
        log_value = data.get("log10_S")
        if log_value is not None and math.isnan(float(log_value)):
            log_value = None
        if s_value > 0 and log_value is None:
            log_value = math.log10(s_value)
        if s_value == 0 and log_value is not None:
            raise ValueError("Records with S = 0 carry no log10_S")
        return {**data, "log10_S": log_value}

    @property
    def has_log_feature(self) -> bool:
        return self.log10_S is not None

    @property
    def case_value(self) -> float:
        """Energy for continuous systems, K for the map."""
        if self.system.is_map:
            return self.system.params["K"]
        return float(self.energy) if self.energy is not None else math.nan

    @property
    def case_name(self) -> str:
        if self.system.is_map:
            return f"{self.system.describe()}"
        return f"{self.system.describe()} E={self.case_value:.6g}"


class SaliTraceReport(BaseModel):
    """Summary written next to a SALI time series."""

    system: str
    final: float
    floor_hit: bool
    threshold: float
    label: Label
    fitted_rate: Optional[float] = None
    fit: Optional[AsymptoteFit] = None
