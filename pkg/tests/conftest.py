"""Pytest configuration and fixtures."""
import tempfile
from collections.abc import Callable
from pathlib import Path
from typing import Generator, Optional

import numpy as np
import pytest

from chaos_ld.cli.main import main
from chaos_ld.config import Settings, get_settings
from chaos_ld.schemas.indicators import IndicatorRecord, Label
from chaos_ld.schemas.propagation import IntegratorConfig
from chaos_ld.schemas.system import SectionSpec, SystemKind, SystemSpec

# standard-map (x, y) points: inside a K = 1.5 island, and next to the hyperbolic origin
MAP_REGULAR_IC = (0.52, 0.0)
MAP_CHAOTIC_IC = (0.001, 0.001)


@pytest.fixture(scope="function")
def temp_dir() -> Generator[Path, None, None]:
    """Create temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture(scope="function")
def test_settings(temp_dir: Path) -> Settings:
    """Create test settings."""
    return Settings(output_dir=temp_dir / "runs", threads=1, log_level="DEBUG")


@pytest.fixture(autouse=True)
def clear_settings_cache() -> Generator[None, None, None]:
    """Environment changes in one test must not leak through the settings cache."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def henon_heiles() -> SystemSpec:
    return SystemSpec.henon_heiles()


@pytest.fixture
def hh_section() -> SectionSpec:
    section = SectionSpec.default_for(SystemKind.HENON_HEILES)
    assert section is not None
    return section


@pytest.fixture
def standard_map() -> SystemSpec:
    return SystemSpec.standard_map(1.5)


@pytest.fixture
def double_pendulum() -> SystemSpec:
    return SystemSpec.double_pendulum(alpha=1.0, sigma=1.0)


@pytest.fixture
def four_well() -> SystemSpec:
    return SystemSpec.four_well(alpha=1.0, beta=1.0, delta=0.1)


@pytest.fixture
def continuous_systems(
    henon_heiles: SystemSpec, double_pendulum: SystemSpec, four_well: SystemSpec
) -> list[SystemSpec]:
    return [
        henon_heiles,
        double_pendulum,
        SystemSpec.double_pendulum(alpha=2.0, sigma=0.5),
        four_well,
        SystemSpec.four_well(alpha=0.5, beta=0.75, delta=0.0),
    ]


@pytest.fixture
def fast_integrator() -> IntegratorConfig:
    """Looser tolerances for tests that only need qualitative behavior."""
    return IntegratorConfig(abs_tol=1e-10, rel_tol=1e-10)


@pytest.fixture
def make_record() -> Callable[..., IndicatorRecord]:
    """Factory for hand-built records."""

    def factory(
        log10_s: Optional[float],
        label: int,
        system: Optional[SystemSpec] = None,
        energy: Optional[float] = 0.125,
        q1: float = 0.0,
        q2: float = 0.0,
    ) -> IndicatorRecord:
        system = system or SystemSpec.henon_heiles()
        return IndicatorRecord(
            system=system,
            energy=None if system.is_map else energy,
            q1=q1,
            q2=q2,
            ld_center=10.0,
            D=0.01,
            R=0.001,
            C=1.0,
            S=0.0 if log10_s is None else 10.0**log10_s,
            sali_log10=-15.0 if label else -1.0,
            label=Label(label),
        )

    return factory


@pytest.fixture
def separable_records(make_record: Callable[..., IndicatorRecord]) -> list[IndicatorRecord]:
    """500 regular records at log10 S = -5 +- 0.1 and 500 chaotic ones at +5 +- 0.1."""
    rng = np.random.default_rng(1)
    regular = rng.uniform(-5.1, -4.9, 500)
    chaotic = rng.uniform(4.9, 5.1, 500)
    records = [make_record(v, 0, q1=float(i)) for i, v in enumerate(regular)]
    records += [make_record(v, 1, q1=float(i)) for i, v in enumerate(chaotic)]
    return records


@pytest.fixture
def run_cli(temp_dir: Path) -> Callable[..., int]:
    """Run the command line with outputs under the temporary directory."""

    def runner(*argv: str, output_dir: Optional[Path] = None) -> int:
        target = output_dir or temp_dir / "out"
        return main(["--output-dir", str(target), *argv])

    return runner
