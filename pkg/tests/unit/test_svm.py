"""Unit tests for the linear SVM."""
import json

import numpy as np
import pytest

from chaos_ld.exceptions import ModelFormatError, RecipeMismatchError, UntrainableError
from chaos_ld.schemas.svm import FeatureSet, LinearSvmModel, Normalization, TrainingInfo
from chaos_ld.schemas.system import SystemSpec
from chaos_ld.services.svm import (
    decision_function,
    evaluate,
    feature_matrix,
    fit,
    fit_normalization,
    hinge_gradient,
    hinge_loss,
    learning_curve,
    load_model,
    model_from_json,
    model_to_json,
    predict,
    save_model,
    subsample,
)

EPOCHS = 40


def _hand_model(w, b, recipe=FeatureSet.LOGS_ONLY, mean=None, scale=None):
    n = len(w)
    return LinearSvmModel(
        recipe=recipe,
        w=list(w),
        b=b,
        normalization=Normalization(mean=mean or [0.0] * n, scale=scale or [1.0] * n),
        training=TrainingInfo(epochs=1, lr0=0.1, batch=64, seed=0),
    )


def _labels(records):
    return np.array([int(r.label) for r in records])


def test_hinge_gradient_matches_finite_differences():
    """Test the subgradient away from the kinks."""
    rng = np.random.default_rng(4)
    x = rng.normal(size=(40, 2))
    y = rng.choice([-1.0, 1.0], size=40)
    w = np.array([0.3, -0.7])
    b = 0.1
    grad_w, grad_b = hinge_gradient(w, b, x, y)
    h = 1e-7
    for k in range(2):
        dw = np.zeros(2)
        dw[k] = h
        numeric = (hinge_loss(w + dw, b, x, y) - hinge_loss(w - dw, b, x, y)) / (2 * h)
        assert grad_w[k] == pytest.approx(numeric, abs=1e-6)
    numeric_b = (hinge_loss(w, b + h, x, y) - hinge_loss(w, b - h, x, y)) / (2 * h)
    assert grad_b == pytest.approx(numeric_b, abs=1e-6)


def test_hinge_loss_values():
    """Test the loss is zero beyond the margin and one on the boundary."""
    x = np.array([[2.0], [0.0]])
    y = np.array([1.0, -1.0])
    assert hinge_loss(np.array([1.0]), 0.0, x[:1], y[:1]) == 0.0
    assert hinge_loss(np.array([1.0]), 0.0, x[1:], y[1:]) == 1.0


def test_fit_separable_data(separable_records):
    """Test a separable training set is fitted perfectly."""
    model, curve = fit(separable_records, FeatureSet.LOGS_ONLY, epochs=EPOCHS)
    assert len(curve) == EPOCHS
    assert curve[-1] < 0.05
    assert curve[-1] <= curve[0]
    assert model.w[0] > 0
    assert model.training.n_train == 1000
    assert evaluate(model, separable_records).accuracy == 1.0


def test_fit_is_deterministic(separable_records):
    """Test the same seed reproduces the same hyperplane."""
    first, _ = fit(separable_records, epochs=5, seed=11)
    second, _ = fit(separable_records, epochs=5, seed=11)
    assert first == second


def test_label_flip_flips_predictions(separable_records, make_record):
    """Test swapping the classes swaps every prediction."""
    flipped = [r.model_copy(update={"label": 1 - int(r.label)}) for r in separable_records]
    model, _ = fit(separable_records, epochs=EPOCHS)
    flipped_model, _ = fit(flipped, epochs=EPOCHS)
    features = feature_matrix(separable_records, FeatureSet.LOGS_ONLY)
    labels, _ = predict(model, features)
    flipped_labels, _ = predict(flipped_model, features)
    assert np.array_equal(flipped_labels, 1 - labels)


def test_shifted_log_features_give_same_predictions(separable_records, make_record):
    """Test z-scoring makes the fit blind to a constant shift of log10 S."""
    shifted = [
        make_record(r.log10_S + 1.0, int(r.label), q1=r.q1) for r in separable_records
    ]
    model, _ = fit(separable_records, epochs=EPOCHS)
    shifted_model, _ = fit(shifted, epochs=EPOCHS)
    assert shifted_model.w == pytest.approx(model.w, rel=1e-6)
    assert shifted_model.b == pytest.approx(model.b, abs=1e-6)
    assert shifted_model.normalization.mean[0] == pytest.approx(
        model.normalization.mean[0] + 1.0
    )


def test_untrainable_sets(make_record):
    """Test empty, single-class and all-S=0 training sets are refused."""
    with pytest.raises(UntrainableError):
        fit([], epochs=1)
    with pytest.raises(UntrainableError):
        fit([make_record(-1.0, 0), make_record(-2.0, 0)], epochs=1)
    with pytest.raises(UntrainableError):
        fit([make_record(None, 0), make_record(None, 1)], FeatureSet.LOGS_ONLY, epochs=1)


def test_zero_s_records_only_dropped_for_log_recipes(make_record):
    """Test S = 0 samples are excluded from log recipes and kept otherwise."""
    records = [make_record(-3.0, 0), make_record(None, 0), make_record(3.0, 1)]
    log_model, _ = fit(records, FeatureSet.LOGS_ONLY, epochs=2)
    raw_model, _ = fit(records, FeatureSet.S_ONLY, epochs=2)
    assert log_model.training.n_train == 2
    assert raw_model.training.n_train == 3
    assert evaluate(log_model, records).skipped == 1


def test_energy_recipe_needs_energy(make_record):
    """Test map records cannot feed an energy recipe."""
    records = [make_record(1.0, 1, system=SystemSpec.standard_map(1.5))]
    with pytest.raises(RecipeMismatchError):
        feature_matrix(records, FeatureSet.LOGS_AND_ENERGY)


def test_energy_recipe_uses_both_features(make_record):
    """Test two-feature recipes normalize each column."""
    records = [make_record(-3.0, 0, energy=0.1), make_record(3.0, 1, energy=0.2)] * 10
    model, _ = fit(records, FeatureSet.LOGS_AND_ENERGY, epochs=20)
    assert len(model.w) == 2
    assert model.normalization.mean == pytest.approx([0.0, 0.15])
    assert evaluate(model, records).accuracy == 1.0


def test_constant_feature_keeps_unit_scale():
    """Test a zero-variance column is left unscaled."""
    normalization = fit_normalization(np.array([[2.0, 1.0], [2.0, 3.0]]))
    assert normalization.mean == [2.0, 2.0]
    assert normalization.scale == [1.0, 1.0]


def test_zero_margin_is_regular():
    """Test the boundary itself belongs to the regular class."""
    labels, margins = predict(_hand_model([1.0], 0.0), [0.0])
    assert labels.tolist() == [0]
    assert margins.tolist() == [0.0]


def test_hand_written_model_document():
    """Test a model written by hand predicts with its own hyperplane."""
    document = json.dumps(
        {
            "version": 1,
            "kind": "linear_svm",
            "recipe": "logS_only",
            "w": [1.0],
            "b": -2.0,
            "normalization": {"mean": [0.0], "scale": [1.0]},
            "training": {"epochs": 1, "lr0": 0.1, "batch": 64, "seed": 0},
        }
    )
    model = model_from_json(document)
    labels, margins = predict(model, [3.0, 1.0])
    assert labels.tolist() == [1, 0]
    assert margins.tolist() == [1.0, -1.0]


def test_model_document_round_trip(separable_records, temp_dir):
    """Test a saved model reloads equal, floats included."""
    model, _ = fit(separable_records, epochs=3, dataset_sha="ab" * 32)
    assert model_from_json(model_to_json(model)) == model
    path = temp_dir / "models" / "model.json"
    save_model(model, path)
    assert load_model(path) == model


def test_bad_model_documents():
    """Test malformed, unversioned, future and inconsistent documents are refused."""
    good = json.loads(model_to_json(_hand_model([1.0], 0.0)))
    with pytest.raises(ModelFormatError):
        model_from_json("{not json")
    with pytest.raises(ModelFormatError):
        model_from_json(json.dumps({k: v for k, v in good.items() if k != "version"}))
    with pytest.raises(ModelFormatError):
        model_from_json(json.dumps({**good, "version": 2}))
    with pytest.raises(ModelFormatError):
        model_from_json(json.dumps({**good, "w": [1.0, 2.0]}))


def test_decision_function_checks_dimension():
    """Test feature rows must match the recipe."""
    model = _hand_model([1.0, 1.0], 0.0, recipe=FeatureSet.S_AND_ENERGY)
    with pytest.raises(RecipeMismatchError):
        decision_function(model, [1.0, 2.0, 3.0])
    assert decision_function(model, [[1.0, 2.0]]).tolist() == [3.0]


def test_evaluate_reports_cases_and_errors(make_record):
    """Test confusion counts, per-case accuracy and the misclassified list."""
    model = _hand_model([1.0], 0.0)
    records = [
        make_record(1.0, 1, energy=0.1),
        make_record(-1.0, 0, energy=0.1),
        make_record(-1.0, 1, energy=0.2, q1=0.3, q2=0.4),
        make_record(2.0, 0, energy=0.2),
    ]
    report = evaluate(model, records)
    assert (report.tp, report.tn, report.fp, report.fn) == (1, 1, 1, 1)
    assert report.accuracy == 0.5
    by_case = {c.value: c for c in report.per_case}
    assert by_case[0.1].accuracy == 1.0
    assert by_case[0.2].accuracy == 0.0
    missed = [m for m in report.misclassified if m.true_label == 1]
    assert (missed[0].q1, missed[0].q2) == (0.3, 0.4)
    with pytest.raises(RecipeMismatchError):
        evaluate(model, records, FeatureSet.S_ONLY)


def test_subsample_is_stratified(separable_records):
    """Test subsamples keep class balance, order and at least one of each class."""
    subset = subsample(separable_records, 0.1, seed=0)
    assert len(subset) == 100
    assert _labels(subset).sum() == 50
    positions = [separable_records.index(r) for r in subset]
    assert positions == sorted(positions)
    tiny = subsample(separable_records, 1e-6, seed=0)
    assert sorted(_labels(tiny).tolist()) == [0, 1]
    assert subsample(separable_records, 0.1, seed=0) == subset
    assert len(subsample(separable_records, 1.0, seed=0)) == 1000


def test_learning_curve(separable_records):
    """Test the learning curve tabulates one row per fraction."""
    frame = learning_curve(
        separable_records, separable_records, FeatureSet.LOGS_ONLY, [0.05, 0.5], epochs=20
    )
    assert list(frame.columns) == [
        "recipe",
        "fraction",
        "n_train",
        "train_accuracy",
        "test_accuracy",
    ]
    assert frame["n_train"].tolist() == [50, 500]
    assert (frame["test_accuracy"] == 1.0).all()


def test_positive_rescaling_keeps_predictions():
    """Test multiplying w and b by a positive factor scales margins and keeps every label."""
    rng = np.random.default_rng(14)
    features = rng.normal(size=(200, 2))
    base = _hand_model([1.5, -0.5], 0.3, recipe=FeatureSet.S_AND_ENERGY)
    labels, margins = predict(base, features)
    for factor in (1e-3, 0.5, 7.0, 1e4):
        scaled = _hand_model(
            [1.5 * factor, -0.5 * factor], 0.3 * factor, recipe=FeatureSet.S_AND_ENERGY
        )
        scaled_labels, scaled_margins = predict(scaled, features)
        assert scaled_labels.tolist() == labels.tolist()
        assert np.allclose(scaled_margins, factor * margins, rtol=1e-12, atol=1e-12 * factor)
