"""Unit tests for dataset persistence."""
import math

import pandas as pd
import pytest

from chaos_ld import __version__
from chaos_ld.exceptions import DatasetFormatError
from chaos_ld.schemas.ensemble import DatasetMetadata, LabeledDataset
from chaos_ld.schemas.system import SystemSpec
from chaos_ld.services.dataset_io import (
    DATASET_COLUMNS,
    datasets_sha256,
    file_sha256,
    read_dataset,
    read_datasets,
    records_to_frame,
    sidecar_path,
    write_dataset,
)

STORED_FIELDS = {"ld_neighbors", "horizon"}


@pytest.fixture
def mixed_records(make_record):
    """Records from every system, including awkward floats and an S = 0 row."""
    return [
        make_record(-1.0 / 3.0, 0, q1=0.1, q2=1e-300),
        make_record(None, 0, q1=-0.2, q2=0.3),
        make_record(7.25, 1, system=SystemSpec.standard_map(0.971635), q1=0.999999, q2=0.5),
        make_record(2.0, 1, system=SystemSpec.double_pendulum(2.0, 0.5), energy=-1.75),
        make_record(0.5, 0, system=SystemSpec.four_well(0.75, 0.25, 0.5), energy=math.pi),
    ]


def _dumps(records):
    return [r.model_dump(exclude=STORED_FIELDS) for r in records]


def test_round_trip_is_exact(mixed_records, temp_dir):
    """Test records read back equal the ones written, float for float."""
    path = temp_dir / "data.csv"
    write_dataset(LabeledDataset(records=mixed_records), path)
    loaded = read_dataset(path)
    assert _dumps(loaded.records) == _dumps(mixed_records)
    assert loaded.metadata is None


def test_file_layout(mixed_records, temp_dir):
    """Test header, integer labels and blank optional cells."""
    path = temp_dir / "data.csv"
    write_dataset(LabeledDataset(records=mixed_records), path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(DATASET_COLUMNS)
    assert len(lines) == 6
    frame = pd.read_csv(path)
    assert frame["label"].tolist() == [0, 0, 1, 1, 0]
    assert frame["system"].tolist()[2] == "standard-map"
    # S = 0 has no logarithm; the map has no energy
    assert pd.isna(frame.loc[1, "log10_S"])
    assert pd.isna(frame.loc[2, "energy"])
    assert pd.isna(frame.loc[0, "param_K"])


def test_rewrite_is_byte_identical(mixed_records, temp_dir):
    """Test writing the same dataset twice gives the same hash."""
    first = write_dataset(LabeledDataset(records=mixed_records), temp_dir / "a.csv")
    second = write_dataset(LabeledDataset(records=mixed_records), temp_dir / "b.csv")
    assert first == second
    assert first == file_sha256(temp_dir / "a.csv")
    assert datasets_sha256([temp_dir / "a.csv"]) == first
    assert datasets_sha256([temp_dir / "a.csv", temp_dir / "b.csv"]) != first


def test_sidecar_round_trip(mixed_records, temp_dir):
    """Test metadata is written next to the CSV and read back."""
    dataset = LabeledDataset(records=mixed_records)
    dataset.metadata = DatasetMetadata(
        package_version=__version__,
        record_count=5,
        attempts=7,
        discarded_count=2,
        failed_count=1,
        label_counts=dataset.label_counts(),
    )
    path = temp_dir / "nested" / "data.csv"
    write_dataset(dataset, path)
    assert sidecar_path(path).exists()
    loaded = read_dataset(path)
    assert loaded.metadata == dataset.metadata
    assert loaded.metadata.label_counts == {"regular": 3, "chaotic": 2}


def test_read_datasets_concatenates(mixed_records, temp_dir):
    """Test multiple files are concatenated in order."""
    write_dataset(LabeledDataset(records=mixed_records[:2]), temp_dir / "a.csv")
    write_dataset(LabeledDataset(records=mixed_records[2:]), temp_dir / "b.csv")
    combined = read_datasets([temp_dir / "a.csv", temp_dir / "b.csv"])
    assert _dumps(combined.records) == _dumps(mixed_records)


def test_wrong_columns_rejected(mixed_records, temp_dir):
    """Test a file with renamed columns breaks the contract."""
    frame = records_to_frame(mixed_records).rename(columns={"S": "s"})
    path = temp_dir / "bad.csv"
    frame.to_csv(path, index=False)
    with pytest.raises(DatasetFormatError):
        read_dataset(path)


def test_bad_rows_rejected(mixed_records, temp_dir):
    """Test unknown labels, systems and missing parameters are reported."""
    for column, value in (("label", 2), ("system", "lorenz"), ("param_alpha", math.nan)):
        frame = records_to_frame(mixed_records)
        frame.loc[3, column] = value
        path = temp_dir / f"bad_{column}.csv"
        frame.to_csv(path, index=False)
        with pytest.raises(DatasetFormatError):
            read_dataset(path)


def test_empty_file_rejected(temp_dir):
    """Test an empty file is a format error."""
    path = temp_dir / "empty.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(DatasetFormatError):
        read_dataset(path)


def test_bad_sidecar_rejected(mixed_records, temp_dir):
    """Test a sidecar with inconsistent counts is a format error."""
    path = temp_dir / "data.csv"
    write_dataset(LabeledDataset(records=mixed_records), path)
    sidecar_path(path).write_text(
        '{"package_version": "0.1.0", "record_count": 5, "attempts": 3, "discarded_count": 0}',
        encoding="utf-8",
    )
    with pytest.raises(DatasetFormatError):
        read_dataset(path)
