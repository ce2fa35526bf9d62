"""System and section schemas."""
from enum import Enum
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class SystemKind(str, Enum):
    """The four model systems."""

    DOUBLE_PENDULUM = "double-pendulum"
    FOUR_WELL = "four-well"
    HENON_HEILES = "henon-heiles"
    STANDARD_MAP = "standard-map"

    @property
    def code(self) -> int:
        """Integer code understood by the compiled kernels."""
        return _KIND_CODES[self]

    @property
    def is_map(self) -> bool:
        return self is SystemKind.STANDARD_MAP


_KIND_CODES = {
    SystemKind.DOUBLE_PENDULUM: 0,
    SystemKind.FOUR_WELL: 1,
    SystemKind.HENON_HEILES: 2,
    SystemKind.STANDARD_MAP: 3,
}

PARAM_NAMES: dict[SystemKind, tuple[str, ...]] = {
    SystemKind.DOUBLE_PENDULUM: ("alpha", "sigma"),
    SystemKind.FOUR_WELL: ("alpha", "beta", "delta"),
    SystemKind.HENON_HEILES: (),
    SystemKind.STANDARD_MAP: ("K",),
}

_DEFAULTS: dict[SystemKind, dict[str, float]] = {
    SystemKind.DOUBLE_PENDULUM: {"alpha": 1.0, "sigma": 1.0},
    SystemKind.FOUR_WELL: {},
    SystemKind.HENON_HEILES: {},
    SystemKind.STANDARD_MAP: {},
}


class SystemSpec(BaseModel):
    """One parameterized dynamical system.

    Serializes to ``{"kind": "...", "params": {...}}`` with parameter names
    ``alpha``, ``sigma``, ``beta``, ``delta`` and ``K``.
    """

    model_config = ConfigDict(frozen=True)

    kind: SystemKind
    params: dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def _fill_and_check(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        kind = SystemKind(data.get("kind"))
        params = {**_DEFAULTS[kind], **{k: float(v) for k, v in (data.get("params") or {}).items()}}
        expected = set(PARAM_NAMES[kind])
        unknown = set(params) - expected
        if unknown:
            raise ValueError(f"Unknown parameters for {kind.value}: {sorted(unknown)}")
        missing = expected - set(params)
        if missing:
            raise ValueError(f"Missing parameters for {kind.value}: {sorted(missing)}")
        if kind is SystemKind.DOUBLE_PENDULUM and (params["alpha"] <= 0 or params["sigma"] <= 0):
            raise ValueError("Double pendulum ratios must satisfy alpha > 0, sigma > 0")
        if kind is SystemKind.FOUR_WELL and min(params.values()) < 0:
            raise ValueError("Four-well parameters must satisfy alpha, beta, delta >= 0")
        if kind is SystemKind.STANDARD_MAP and params["K"] < 0:
            raise ValueError("Standard map strength must satisfy K >= 0")
        return {"kind": kind, "params": {name: params[name] for name in PARAM_NAMES[kind]}}

    @classmethod
    def double_pendulum(cls, alpha: float = 1.0, sigma: float = 1.0) -> "SystemSpec":
        return cls(kind=SystemKind.DOUBLE_PENDULUM, params={"alpha": alpha, "sigma": sigma})

    @classmethod
    def four_well(cls, alpha: float, beta: float, delta: float) -> "SystemSpec":
        return cls(
            kind=SystemKind.FOUR_WELL, params={"alpha": alpha, "beta": beta, "delta": delta}
        )

    @classmethod
    def henon_heiles(cls) -> "SystemSpec":
        return cls(kind=SystemKind.HENON_HEILES)

    @classmethod
    def standard_map(cls, K: float) -> "SystemSpec":  # noqa: N803
        return cls(kind=SystemKind.STANDARD_MAP, params={"K": K})

    @property
    def is_map(self) -> bool:
        return self.kind.is_map

    @property
    def dimension(self) -> int:
        """Phase-space dimension."""
        return 2 if self.is_map else 4

    def param(self, name: str) -> Optional[float]:
        return self.params.get(name)

    def param_vector(self) -> np.ndarray:
        """Parameters in kernel order, padded to length 3."""
        values = [self.params[name] for name in PARAM_NAMES[self.kind]]
        return np.array(values + [0.0] * (3 - len(values)), dtype=np.float64)

    def describe(self) -> str:
        if not self.params:
            return self.kind.value
        inner = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.kind.value}({inner})"


class SectionSpec(BaseModel):
    """A Poincare surface of section for a 2-DoF system.

    States are ``(q1, q2, p1, p2)``. The section fixes ``q[fixed_index]``; the
    conjugate momentum (``constrained_index = fixed_index + 2``) is solved from the
    energy, and the remaining position/momentum pair spans the 2D slice.
    ``sign = +1`` selects crossings where the fixed coordinate increases.
    """

    model_config = ConfigDict(frozen=True)

    slice_indices: tuple[int, int]
    fixed_index: int = Field(..., ge=0, le=1)
    fixed_value: float = 0.0
    constrained_index: int = Field(..., ge=2, le=3)
    sign: Literal[1, -1] = 1

    @model_validator(mode="after")
    def _check_indices(self) -> "SectionSpec":
        indices = {*self.slice_indices, self.fixed_index, self.constrained_index}
        if len(indices) != 4 or not indices <= {0, 1, 2, 3}:
            raise ValueError("Slice, fixed and constrained coordinates must be distinct indices")
        if self.constrained_index != self.fixed_index + 2:
            raise ValueError("Constrained coordinate must be conjugate to the fixed one")
        if self.slice_indices != (1 - self.fixed_index, 3 - self.fixed_index):
            raise ValueError("Slice must be the free coordinate and its conjugate momentum")
        return self

    @property
    def free_index(self) -> int:
        """Index of the free position coordinate of the slice."""
        return 1 - self.fixed_index

    @classmethod
    def default_for(cls, kind: SystemKind) -> Optional["SectionSpec"]:
        """The sampling section used for each continuous system (None for the map)."""
        if kind is SystemKind.HENON_HEILES:
            # x = 0, p_x >= 0; slice (y, p_y)
            return cls(slice_indices=(1, 3), fixed_index=0, constrained_index=2)
        if kind is SystemKind.FOUR_WELL:
            # y = 0, p_y >= 0; slice (x, p_x)
            return cls(slice_indices=(0, 2), fixed_index=1, constrained_index=3)
        if kind is SystemKind.DOUBLE_PENDULUM:
            # theta1 = 0, upward crossing; slice (theta2, p2)
            return cls(slice_indices=(1, 3), fixed_index=0, constrained_index=2)
        return None
