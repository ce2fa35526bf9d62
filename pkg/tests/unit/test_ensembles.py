"""Unit tests for ensemble sampling and dataset generation."""
import numpy as np
import pytest
from pydantic import ValidationError

from chaos_ld.exceptions import DegenerateEnergyError, IntegrationError, StencilInfeasibleError
from chaos_ld.schemas.ensemble import EnsembleSpec
from chaos_ld.schemas.system import SystemSpec
from chaos_ld.services import ensembles
from chaos_ld.services.ensembles import (
    EnsembleService,
    per_sample_rng,
    resolve_cases,
    sample_ensemble,
)
from chaos_ld.services.systems import is_feasible, potential_minimum


@pytest.fixture
def map_spec() -> EnsembleSpec:
    return EnsembleSpec(
        system=SystemSpec.standard_map(1.5),
        k_values=[0.5, 1.5],
        n_per_case=6,
        rng_seed=42,
        tau_ld=200,
        t_sali=2000,
    )


@pytest.fixture
def hh_spec() -> EnsembleSpec:
    return EnsembleSpec(
        system=SystemSpec.henon_heiles(), energies=[1 / 12, 1 / 8], n_per_case=20, rng_seed=3
    )


def test_per_sample_streams_are_independent():
    """Test streams depend on (seed, case, sample) and nothing else."""
    first = per_sample_rng(1, 0, 0).random(3)
    assert np.array_equal(first, per_sample_rng(1, 0, 0).random(3))
    assert not np.array_equal(first, per_sample_rng(1, 0, 1).random(3))
    assert not np.array_equal(first, per_sample_rng(1, 1, 0).random(3))
    assert not np.array_equal(first, per_sample_rng(2, 0, 0).random(3))


def test_map_samples_cover_unit_torus(map_spec):
    """Test map samples are drawn on [0, 1)^2 in (case, sample) order."""
    samples = sample_ensemble(map_spec)
    assert len(samples) == 12
    assert [(s.case_index, s.sample_index) for s in samples][:3] == [(0, 0), (0, 1), (0, 2)]
    for s in samples:
        assert 0.0 <= s.point[0] < 1.0
        assert 0.0 <= s.point[1] < 1.0
        assert s.energy is None


def test_continuous_samples_are_feasible(hh_spec, henon_heiles, hh_section):
    """Test every drawn slice point lies inside the energy shell."""
    samples = sample_ensemble(hh_spec)
    assert len(samples) == 40
    for s in samples:
        assert is_feasible(henon_heiles, hh_section, s.point, s.energy)
        assert s.state[2] >= 0.0


def test_sampling_is_reproducible(hh_spec):
    """Test equal seeds give equal ensembles and other seeds differ."""
    first = [s.point for s in sample_ensemble(hh_spec)]
    again = [s.point for s in sample_ensemble(hh_spec)]
    other = [s.point for s in sample_ensemble(hh_spec.model_copy(update={"rng_seed": 4}))]
    assert first == again
    assert first != other


def test_relative_energies_are_shifted(four_well):
    """Test relative energies are measured from the potential minimum."""
    spec = EnsembleSpec(system=four_well, energies=[0.5, 1.0], relative_energies=True)
    v_min = potential_minimum(four_well)[1]
    assert [c.energy for c in resolve_cases(spec)] == pytest.approx([0.5 + v_min, 1.0 + v_min])


def test_energy_below_minimum_is_degenerate():
    """Test an empty energy shell is reported before any propagation."""
    spec = EnsembleSpec(system=SystemSpec.henon_heiles(), energies=[-0.1], n_per_case=1)
    with pytest.raises(DegenerateEnergyError):
        EnsembleService(threads=1).generate_dataset(spec)


def test_spec_validation():
    """Test ensembles need cases of the right kind."""
    with pytest.raises(ValidationError):
        EnsembleSpec(system=SystemSpec.standard_map(1.0))
    with pytest.raises(ValidationError):
        EnsembleSpec(system=SystemSpec.henon_heiles())
    with pytest.raises(ValidationError):
        EnsembleSpec(system=SystemSpec.standard_map(1.0), k_values=[1.0], tau_ld=10.5)


def test_generate_map_dataset(map_spec, test_settings):
    """Test a small map dataset carries consistent metadata."""
    dataset = EnsembleService(test_settings).generate_dataset(map_spec)
    assert len(dataset) == 12
    meta = dataset.metadata
    assert meta is not None
    assert meta.record_count == 12
    assert meta.attempts == 12
    assert meta.discarded_count == 0
    assert sum(meta.label_counts.values()) == 12
    assert [r.system.params["K"] for r in dataset.records] == [0.5] * 6 + [1.5] * 6
    for record in dataset.records:
        assert record.horizon == 200


def test_thread_count_does_not_change_records(map_spec):
    """Test parallel generation returns the same records in the same order."""
    serial = EnsembleService(threads=1).generate_dataset(map_spec)
    parallel = EnsembleService(threads=4).generate_dataset(map_spec)
    assert [r.model_dump() for r in serial.records] == [r.model_dump() for r in parallel.records]


def test_infeasible_stencils_are_redrawn(map_spec, make_record, monkeypatch):
    """Test a rejected stencil is redrawn from the same stream."""
    calls = {"n": 0}

    def flaky(system, *args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 1:
            raise StencilInfeasibleError("edge of the shell")
        return make_record(-3.0, 0, system=system)

    monkeypatch.setattr(ensembles, "evaluate_record", flaky)
    spec = map_spec.model_copy(update={"n_per_case": 3, "k_values": [1.5]})
    dataset = EnsembleService(threads=1).generate_dataset(spec)
    assert len(dataset) == 3
    assert dataset.metadata.attempts == 4
    assert dataset.metadata.discarded_count == 1
    assert dataset.metadata.failed_count == 0


def test_integration_failures_are_skipped(map_spec, monkeypatch):
    """Test failed propagations are dropped and counted."""

    def failing(*args, **kwargs):
        raise IntegrationError("step size underflow", 12.5)

    monkeypatch.setattr(ensembles, "evaluate_record", failing)
    dataset = EnsembleService(threads=2).generate_dataset(map_spec)
    assert len(dataset) == 0
    assert dataset.metadata.failed_count == 12
    assert dataset.metadata.discarded_count == 12


def test_resampling_gives_up(map_spec, monkeypatch):
    """Test a sample is abandoned after max_resamples infeasible stencils."""

    def infeasible(*args, **kwargs):
        raise StencilInfeasibleError("always")

    monkeypatch.setattr(ensembles, "evaluate_record", infeasible)
    spec = map_spec.model_copy(update={"n_per_case": 1, "k_values": [1.5], "max_resamples": 5})
    dataset = EnsembleService(threads=1).generate_dataset(spec)
    assert len(dataset) == 0
    assert dataset.metadata.attempts == 5
    assert dataset.metadata.discarded_count == 5


def test_threads_default_to_settings(monkeypatch):
    """Test the worker count falls back to CHAOS_LD_THREADS."""
    monkeypatch.setenv("CHAOS_LD_THREADS", "3")
    assert EnsembleService().threads == 3
    assert EnsembleService(threads=2).threads == 2
