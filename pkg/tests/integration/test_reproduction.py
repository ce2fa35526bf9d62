"""Desk-scale reproduction checks.

Minutes to an hour each; deselected by default, run with ``nox -s tests_slow``.
"""
import json

import numpy as np
import pandas as pd
import pytest

from chaos_ld.schemas.ensemble import EnsembleSpec
from chaos_ld.schemas.propagation import IntegratorConfig
from chaos_ld.schemas.svm import FeatureSet
from chaos_ld.services.ensembles import EnsembleService, sample_ensemble
from chaos_ld.services.propagation import iterate_map_sali, propagate, propagate_ld, propagate_sali
from chaos_ld.services.svm import learning_curve
from chaos_ld.services.systems import energy
from chaos_ld.services.threshold import classify_by_threshold, find_threshold
from tests.conftest import MAP_CHAOTIC_IC, MAP_REGULAR_IC

pytestmark = pytest.mark.slow

THREADS = 4


def test_map_sali_asymptotics(standard_map):
    """Test regular map orbits decay as n^-2 and chaotic ones reach -13 within 10^4."""
    regular = iterate_map_sali(standard_map, MAP_REGULAR_IC, 100_000)
    n = np.asarray(regular.times)
    values = np.asarray(regular.log10_sali)
    window = (n >= 1e3) & (n <= 1e5)
    slope = np.polyfit(np.log10(n[window]), values[window], 1)[0]
    assert slope == pytest.approx(-2.0, abs=0.3)

    chaotic = iterate_map_sali(standard_map, MAP_CHAOTIC_IC, 10_000)
    assert min(chaotic.log10_sali) < -13.0


def test_henon_heiles_sali_asymptotics(henon_heiles):
    """Test regular orbits plateau above -8 and chaotic ones cross it at H = 1/8."""
    spec = EnsembleSpec(system=henon_heiles, energies=[0.125], n_per_case=40, rng_seed=5)
    found = {"regular": False, "chaotic": False}
    for sample in sample_ensemble(spec):
        series = propagate_sali(henon_heiles, sample.state, 1.0e4)
        t = np.asarray(series.times)
        values = np.asarray(series.log10_sali)
        if series.floor_hit or series.final < -8.0:
            found["chaotic"] = True
        else:
            late = values[t >= 5.0e3]
            assert late.min() > -8.0
            assert late.max() - late.min() < 2.0
            found["regular"] = True
        if all(found.values()):
            break
    assert found == {"regular": True, "chaotic": True}


def test_energy_drift_at_descriptor_horizon(henon_heiles, double_pendulum):
    """Test energy drift stays below 1e-8 over a full descriptor horizon."""
    for system, level, tau in ((henon_heiles, 0.125, 1000.0), (double_pendulum, 0.0, 700.0)):
        spec = EnsembleSpec(system=system, energies=[level], n_per_case=5, rng_seed=1)
        for sample in sample_ensemble(spec):
            final = propagate(system, sample.state, tau)
            assert energy(system, final) == pytest.approx(level, abs=1e-8)


def test_descriptor_self_convergence(henon_heiles):
    """Test the descriptor is stable to six digits when tolerances tighten."""
    spec = EnsembleSpec(system=henon_heiles, energies=[0.125], n_per_case=3, rng_seed=2)
    tight = IntegratorConfig(abs_tol=1e-13, rel_tol=1e-13)
    for sample in sample_ensemble(spec):
        _, ld = propagate_ld(henon_heiles, sample.state, 1000.0)
        _, ld_tight = propagate_ld(henon_heiles, sample.state, 1000.0, config=tight)
        assert ld > 0
        assert ld == pytest.approx(ld_tight, rel=1e-6)


def test_henon_heiles_threshold_agrees_with_sali(henon_heiles):
    """Test the log10 S valley reproduces the SALI labels on a 1000-IC ensemble."""
    spec = EnsembleSpec(system=henon_heiles, energies=[0.125], n_per_case=1000, rng_seed=0)
    dataset = EnsembleService(threads=THREADS).generate_dataset(spec)
    usable = [r for r in dataset.records if r.log10_S is not None]
    values = np.array([r.log10_S for r in usable])
    result = find_threshold(values)
    assert result.converged
    labels = classify_by_threshold(values, result.threshold)
    truth = np.array([int(r.label) for r in usable])
    assert (labels == truth).mean() >= 0.88


def test_double_pendulum_self_classification(double_pendulum):
    """Test a log-S model classifies held-out pendulum data at 97% or better."""
    energies = np.linspace(-2.5, 3.0, 8).tolist()

    def generate(seed: int):
        spec = EnsembleSpec(
            system=double_pendulum, energies=energies, n_per_case=100, rng_seed=seed, t_sali=1e4
        )
        return EnsembleService(threads=THREADS).generate_dataset(spec).records

    train, test = generate(1), generate(2)
    frame = learning_curve(train, test, FeatureSet.LOGS_ONLY, [0.1, 0.5, 1.0], epochs=1000)
    assert (frame["test_accuracy"] >= 0.97).all()
    assert (frame["train_accuracy"] >= frame["test_accuracy"] - 0.02).all()


def test_transfer_campaign(run_cli, temp_dir):
    """Test pendulum-trained models on Henon-Heiles, the standard map and the four-well cases."""
    out = temp_dir / "campaign"
    code = run_cli(
        "reproduce",
        "--n-train",
        "200",
        "--n-eval",
        "1000",
        "--four-well-energy-levels",
        "2",
        "--t-sali",
        "1e4",
        output_dir=out,
    )
    assert code == 0
    table1 = pd.read_csv(out / "table1.csv")
    table2 = pd.read_csv(out / "table2.csv")
    table3 = pd.read_csv(out / "table3.csv")

    def row(table, column, value):
        return table.loc[np.isclose(table[column], value)].iloc[0]

    for energy_level, floor in ((1 / 20, 0.95), (1 / 15, 0.85), (1 / 12, 0.85), (1 / 10, 0.9)):
        assert row(table1, "energy", energy_level)["accuracy_logS_only"] >= floor
    for k, floor in ((0.5, 0.95), (0.971635, 0.80), (1.5, 0.95)):
        assert row(table2, "K", k)["accuracy_logS_only"] >= floor
    hh_high = row(table1, "energy", 1 / 8)
    assert hh_high["accuracy_logS_only"] >= 0.90
    # raw S does worse where the descriptor field spans many decades
    assert hh_high["accuracy_S_only"] < hh_high["accuracy_logS_only"]
    critical = row(table2, "K", 0.971635)
    assert critical["accuracy_S_only"] < critical["accuracy_logS_only"]
    assert table3["case"].tolist() == list(range(1, 9))
    assert list(table3.columns) == ["case", "n", "accuracy_logS_only", "accuracy_S_only"]
    assert (table3["n"] > 0).all()
    assert table3["accuracy_logS_only"].median() >= 0.85
    model = json.loads((out / "model_logS_only.json").read_text())
    assert model["recipe"] == "logS_only"
