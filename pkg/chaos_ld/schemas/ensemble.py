"""Ensemble, dataset and threshold schemas."""
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from chaos_ld.schemas.indicators import IndicatorRecord, Label
from chaos_ld.schemas.propagation import IntegratorConfig
from chaos_ld.schemas.system import SectionSpec, SystemKind, SystemSpec

# LD horizon per system (time units, or iterations for the map)
DEFAULT_LD_HORIZON: dict[SystemKind, float] = {
    SystemKind.DOUBLE_PENDULUM: 700.0,
    SystemKind.FOUR_WELL: 700.0,
    SystemKind.HENON_HEILES: 1000.0,
    SystemKind.STANDARD_MAP: 5000.0,
}

# log10 SALI labeling thresholds
DEFAULT_SALI_THRESHOLD: dict[SystemKind, float] = {
    SystemKind.DOUBLE_PENDULUM: -8.0,
    SystemKind.FOUR_WELL: -8.0,
    SystemKind.HENON_HEILES: -8.0,
    SystemKind.STANDARD_MAP: -13.0,
}

MAX_SEED = 2**64 - 1


class EnsembleCase(BaseModel):
    """One (system, energy) cell of an ensemble."""

    model_config = ConfigDict(frozen=True)

    index: int = Field(..., ge=0)
    system: SystemSpec
    energy: Optional[float] = None


class EnsembleSpec(BaseModel):
    """What to sample and how to label it.

    Continuous systems are swept over ``energies``; the map is swept over
    ``k_values`` (the ``K`` in ``system`` is then ignored).
    """

    model_config = ConfigDict(frozen=True)

    system: SystemSpec
    energies: list[float] = Field(default_factory=list)
    k_values: list[float] = Field(default_factory=list)
    relative_energies: bool = False
    n_per_case: int = Field(default=10_000, ge=1)
    section: Optional[SectionSpec] = None
    rng_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    tau_ld: Optional[float] = Field(default=None, gt=0)
    t_sali: float = Field(default=1.0e5, gt=0)
    sali_threshold: Optional[float] = None
    stencil_sigma: float = Field(default=1.0e-4, gt=0)
    sali_sample_ratio: float = Field(default=1.2, gt=1)
    max_resamples: int = Field(default=100, ge=1)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)

    @model_validator(mode="after")
    def _check_cases(self) -> "EnsembleSpec":
        if self.system.is_map:
            if not self.k_values:
                raise ValueError("A standard-map ensemble needs at least one K value")
            if any(k < 0 for k in self.k_values):
                raise ValueError("K values must be nonnegative")
            if self.section is not None:
                raise ValueError("The standard map is sampled on the whole torus, not a section")
            if self.tau_ld is not None and self.tau_ld != int(self.tau_ld):
                raise ValueError("Map horizons are whole iteration counts")
        elif not self.energies:
            raise ValueError("A continuous ensemble needs at least one energy")
        return self

    @property
    def resolved_section(self) -> Optional[SectionSpec]:
        if self.system.is_map:
            return None
        return self.section or SectionSpec.default_for(self.system.kind)

    @property
    def resolved_tau(self) -> float:
        return self.tau_ld if self.tau_ld is not None else DEFAULT_LD_HORIZON[self.system.kind]

    @property
    def resolved_threshold(self) -> float:
        if self.sali_threshold is not None:
            return self.sali_threshold
        return DEFAULT_SALI_THRESHOLD[self.system.kind]

    def cases(self) -> list[EnsembleCase]:
        """Cases in the order their records appear in the dataset.

        Relative energies are resolved by the ensemble service, which knows the
        potential minimum.
        """
        if self.system.is_map:
            return [
                EnsembleCase(index=i, system=SystemSpec.standard_map(k))
                for i, k in enumerate(self.k_values)
            ]
        return [
            EnsembleCase(index=i, system=self.system, energy=e) for i, e in enumerate(self.energies)
        ]


class DatasetMetadata(BaseModel):
    """Sidecar written next to every dataset CSV."""

    spec: Optional[EnsembleSpec] = None
    package_version: str
    record_count: int = Field(..., ge=0)
    attempts: int = Field(..., ge=0)
    discarded_count: int = Field(..., ge=0)
    failed_count: int = Field(default=0, ge=0)
    label_counts: dict[str, int] = Field(default_factory=dict)
    # set when the labels come from a histogram valley instead of SALI
    threshold: Optional[float] = None
    threshold_column: Optional[str] = None

    @model_validator(mode="after")
    def _check_counts(self) -> "DatasetMetadata":
        if self.record_count + self.discarded_count != self.attempts:
            raise ValueError("record_count + discarded_count must equal attempts")
        if self.failed_count > self.discarded_count:
            raise ValueError("Failed propagations are a subset of discarded samples")
        return self


class LabeledDataset(BaseModel):
    """Records in deterministic (case, sample) order."""

    records: list[IndicatorRecord]
    metadata: Optional[DatasetMetadata] = None

    def __len__(self) -> int:
        return len(self.records)

    def label_counts(self) -> dict[str, int]:
        counts = {label.name.lower(): 0 for label in Label}
        for record in self.records:
            counts[record.label.name.lower()] += 1
        return counts


class ThresholdResult(BaseModel):
    """Valley between the two dominant modes of a histogram."""

    threshold: float
    peaks: tuple[float, float]
    bin_edges: list[float]
    counts: list[int]
    bins: int
    smoothing: int
    iterations: int
    converged: bool

    @model_validator(mode="after")
    def _check(self) -> "ThresholdResult":
        low, high = self.peaks
        if not low < self.threshold < high:
            raise ValueError("Threshold must lie strictly between the two peaks")
        if len(self.bin_edges) != len(self.counts) + 1:
            raise ValueError("Histogram edges and counts disagree")
        return self
