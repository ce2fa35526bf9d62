"""Dataset CSV and sidecar persistence."""
import hashlib
import logging
import math
from collections.abc import Iterable
from pathlib import Path
from typing import Any, Optional

import pandas as pd
from pydantic import ValidationError

from chaos_ld.exceptions import DatasetFormatError
from chaos_ld.schemas.ensemble import DatasetMetadata, LabeledDataset
from chaos_ld.schemas.indicators import IndicatorRecord, Label
from chaos_ld.schemas.system import PARAM_NAMES, SystemKind, SystemSpec

logger = logging.getLogger(__name__)

PARAM_COLUMNS = ("param_alpha", "param_sigma", "param_beta", "param_delta", "param_K")

DATASET_COLUMNS = (
    "system",
    *PARAM_COLUMNS,
    "energy",
    "q1",
    "q2",
    "ld_center",
    "D",
    "R",
    "C",
    "S",
    "log10_S",
    "sali_log10",
    "label",
)

FLOAT_FORMAT = "%.17g"


def sidecar_path(csv_path: Path) -> Path:
    """``dataset.csv`` -> ``dataset.json``."""
    return Path(csv_path).with_suffix(".json")


def file_sha256(file_path: Path) -> str:
    """SHA-256 of a file, streamed in 4 KiB blocks."""
    sha256_hash = hashlib.sha256()
    with open(file_path, "rb") as f:
        for byte_block in iter(lambda: f.read(4096), b""):
            sha256_hash.update(byte_block)
    return sha256_hash.hexdigest()


def records_to_frame(records: Iterable[IndicatorRecord]) -> pd.DataFrame:
    """One row per record, columns in file order."""
    rows = []
    for record in records:
        row: dict[str, Any] = {"system": record.system.kind.value}
        for column in PARAM_COLUMNS:
            value = record.system.param(column.removeprefix("param_"))
            row[column] = math.nan if value is None else value
        row.update(
            energy=math.nan if record.energy is None else record.energy,
            q1=record.q1,
            q2=record.q2,
            ld_center=record.ld_center,
            D=record.D,
            R=record.R,
            C=record.C,
            S=record.S,
            log10_S=math.nan if record.log10_S is None else record.log10_S,
            sali_log10=record.sali_log10,
            label=int(record.label),
        )
        rows.append(row)
    frame = pd.DataFrame(rows, columns=list(DATASET_COLUMNS))
    float_columns = [c for c in DATASET_COLUMNS if c not in ("system", "label")]
    frame[float_columns] = frame[float_columns].astype("float64")
    frame["label"] = frame["label"].astype("int64")
    return frame


def _system_of(row: Any, kind: SystemKind, cache: dict[tuple, SystemSpec]) -> SystemSpec:
    params = {}
    for name in PARAM_NAMES[kind]:
        value = getattr(row, f"param_{name}")
        if pd.isna(value):
            raise DatasetFormatError(f"{kind.value} row lacks parameter {name}")
        params[name] = float(value)
    key = (kind, tuple(sorted(params.items())))
    if key not in cache:
        cache[key] = SystemSpec(kind=kind, params=params)
    return cache[key]


def _optional(value: Any) -> Optional[float]:
    return None if pd.isna(value) else float(value)


def frame_to_records(frame: pd.DataFrame) -> list[IndicatorRecord]:
    """Inverse of ``records_to_frame``; neighbor descriptors are not stored."""
    if tuple(frame.columns) != DATASET_COLUMNS:
        raise DatasetFormatError(
            f"Dataset columns {list(frame.columns)} do not match {list(DATASET_COLUMNS)}"
        )
    cache: dict[tuple, SystemSpec] = {}
    records = []
    for index, row in enumerate(frame.itertuples(index=False)):
        try:
            kind = SystemKind(row.system)
            records.append(
                IndicatorRecord(
                    system=_system_of(row, kind, cache),
                    energy=_optional(row.energy),
                    q1=float(row.q1),
                    q2=float(row.q2),
                    ld_center=float(row.ld_center),
                    D=float(row.D),
                    R=float(row.R),
                    C=float(row.C),
                    S=float(row.S),
                    log10_S=_optional(row.log10_S),
                    sali_log10=float(row.sali_log10),
                    label=Label(int(row.label)),
                )
            )
        except (ValueError, ValidationError) as exc:
            raise DatasetFormatError(f"Row {index + 2}: {exc}") from exc
    return records


def write_dataset(dataset: LabeledDataset, csv_path: Path) -> str:
    """Write the CSV and its JSON sidecar; returns the CSV's SHA-256."""
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    frame = records_to_frame(dataset.records)
    frame.to_csv(csv_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    if dataset.metadata is not None:
        sidecar_path(csv_path).write_text(
            dataset.metadata.model_dump_json(indent=2) + "\n", encoding="utf-8"
        )
    logger.info("Wrote %d records to %s", len(dataset.records), csv_path)
    return file_sha256(csv_path)


def read_dataset(csv_path: Path) -> LabeledDataset:
    """Read a dataset CSV (and its sidecar, when present).

    Raises:
        DatasetFormatError: if the file breaks the column contract.
    """
    csv_path = Path(csv_path)
    try:
        frame = pd.read_csv(
            csv_path, float_precision="round_trip", dtype={"system": str}, encoding="utf-8"
        )
    except pd.errors.EmptyDataError as exc:
        raise DatasetFormatError(f"{csv_path} is empty") from exc
    except pd.errors.ParserError as exc:
        raise DatasetFormatError(f"{csv_path}: {exc}") from exc
    records = frame_to_records(frame)
    metadata = None
    sidecar = sidecar_path(csv_path)
    if sidecar.exists():
        try:
            metadata = DatasetMetadata.model_validate_json(sidecar.read_text(encoding="utf-8"))
        except ValidationError as exc:
            raise DatasetFormatError(f"{sidecar}: {exc}") from exc
    logger.debug("Read %d records from %s", len(records), csv_path)
    return LabeledDataset(records=records, metadata=metadata)


def read_datasets(paths: Iterable[Path]) -> LabeledDataset:
    """Concatenate several dataset files in the given order."""
    records: list[IndicatorRecord] = []
    for path in paths:
        records.extend(read_dataset(path).records)
    return LabeledDataset(records=records)


def datasets_sha256(paths: Iterable[Path]) -> str:
    """Fingerprint of one or more dataset files (the file hash for a single file)."""
    digests = [file_sha256(Path(p)) for p in paths]
    if len(digests) == 1:
        return digests[0]
    return hashlib.sha256("".join(digests).encode("ascii")).hexdigest()
