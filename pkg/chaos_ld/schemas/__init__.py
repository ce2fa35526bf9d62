"""Pydantic models shared by services and the command line."""
from chaos_ld.schemas.ensemble import EnsembleSpec, LabeledDataset, ThresholdResult
from chaos_ld.schemas.indicators import IndicatorRecord, Label, NeighborStencil
from chaos_ld.schemas.propagation import Direction, IntegratorConfig, SaliSeries
from chaos_ld.schemas.svm import EvalReport, FeatureSet, LinearSvmModel
from chaos_ld.schemas.system import SectionSpec, SystemKind, SystemSpec

__all__ = [
    "Direction",
    "EnsembleSpec",
    "EvalReport",
    "FeatureSet",
    "IndicatorRecord",
    "IntegratorConfig",
    "Label",
    "LabeledDataset",
    "LinearSvmModel",
    "NeighborStencil",
    "SaliSeries",
    "SectionSpec",
    "SystemKind",
    "SystemSpec",
    "ThresholdResult",
]
