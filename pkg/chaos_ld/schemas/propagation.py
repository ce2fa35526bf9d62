"""Propagation schemas."""
import math
from enum import Enum
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from chaos_ld.config import Settings


class Direction(str, Enum):
    """Time direction of a propagation."""

    FORWARD = "forward"
    BACKWARD = "backward"


class IntegratorConfig(BaseModel):
    """Embedded Runge-Kutta 5(4) settings."""

    model_config = ConfigDict(frozen=True)

    method: Literal["dopri5"] = "dopri5"
    abs_tol: float = Field(default=1e-12, gt=0)
    rel_tol: float = Field(default=1e-12, gt=0)
    max_step: float = Field(default=0.5, gt=0)
    initial_step: float = Field(default=1e-3, gt=0)

    @classmethod
    def from_settings(cls, settings: Settings) -> "IntegratorConfig":
        return cls(
            abs_tol=settings.abs_tol,
            rel_tol=settings.rel_tol,
            max_step=settings.max_step,
            initial_step=settings.initial_step,
        )


class SaliSeries(BaseModel):
    """Sampled log10 SALI along an orbit."""

    model_config = ConfigDict(frozen=True)

    times: list[float]
    log10_sali: list[float]
    floor_hit: bool = False
    fitted_rate: Optional[float] = None

    @model_validator(mode="after")
    def _check(self) -> "SaliSeries":
        if len(self.times) != len(self.log10_sali):
            raise ValueError("times and log10_sali must have equal length")
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("Sample times must be monotone")
        # SALI of two unit vectors is at most 2
        if any(v > math.log10(2.0) + 1e-12 for v in self.log10_sali):
            raise ValueError("log10 SALI cannot exceed log10(2)")
        return self

    @property
    def final(self) -> float:
        """Last sampled log10 SALI."""
        return self.log10_sali[-1]

    @property
    def minimum(self) -> float:
        return min(self.log10_sali)

