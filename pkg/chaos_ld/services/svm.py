"""Linear SVM trained with hinge loss and mini-batch SGD."""
import json
import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from chaos_ld.exceptions import ModelFormatError, RecipeMismatchError, UntrainableError
from chaos_ld.schemas.indicators import IndicatorRecord, Label
from chaos_ld.schemas.svm import (
    MODEL_FORMAT_VERSION,
    CaseAccuracy,
    EvalReport,
    FeatureSet,
    LinearSvmModel,
    Misclassified,
    Normalization,
    TrainingInfo,
)

logger = logging.getLogger(__name__)


def usable_records(records: Sequence[IndicatorRecord], recipe: FeatureSet) -> list[IndicatorRecord]:
    """Records the recipe can featurize; log recipes drop S = 0."""
    if recipe.uses_log:
        return [r for r in records if r.has_log_feature]
    return list(records)


def feature_matrix(records: Sequence[IndicatorRecord], recipe: FeatureSet) -> np.ndarray:
    """(n, n_features) matrix in original units.

    Raises:
        RecipeMismatchError: the recipe needs the energy and a record has none,
            or a log recipe meets an S = 0 record.
    """
    rows = np.empty((len(records), recipe.n_features), dtype=np.float64)
    for i, record in enumerate(records):
        if recipe.uses_log:
            if record.log10_S is None:
                raise RecipeMismatchError(f"{recipe.value} cannot use records with S = 0")
            rows[i, 0] = record.log10_S
        else:
            rows[i, 0] = record.S
        if recipe.uses_energy:
            if record.energy is None:
                raise RecipeMismatchError(
                    f"Recipe {recipe.value} needs the energy; {record.system.describe()} has none"
                )
            rows[i, 1] = record.energy
    return rows


def labels_pm(labels: Sequence[int] | np.ndarray) -> np.ndarray:
    """0/1 labels -> -1/+1."""
    return 2.0 * np.asarray(labels, dtype=np.float64) - 1.0


def fit_normalization(features: np.ndarray) -> Normalization:
    """Z-score parameters; a constant column keeps scale 1."""
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    return Normalization(mean=mean.tolist(), scale=scale.tolist())


def normalize(features: np.ndarray, normalization: Normalization) -> np.ndarray:
    return (features - np.asarray(normalization.mean)) / np.asarray(normalization.scale)


def hinge_loss(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray) -> float:
    """Mean of max(0, 1 - y (w.x + b))."""
    margins = y * (x @ w + b)
    return float(np.mean(np.maximum(0.0, 1.0 - margins)))


def hinge_gradient(
    w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, float]:
    """Subgradient of ``hinge_loss`` with respect to (w, b); zero on the flat side of a kink."""
    active = y * (x @ w + b) < 1.0
    n = y.size
    grad_w = -(x[active].T @ y[active]) / n
    grad_b = -float(np.sum(y[active])) / n
    return grad_w, grad_b


def fit(
    records: Sequence[IndicatorRecord],
    recipe: FeatureSet = FeatureSet.LOGS_ONLY,
    epochs: int = 5000,
    lr0: float = 0.1,
    decay_steps: float = 1.0e4,
    batch_size: int = 64,
    seed: int = 0,
    dataset_sha: Optional[str] = None,
) -> tuple[LinearSvmModel, list[float]]:
    """Fit a hyperplane by SGD on the mean hinge loss.

    Each epoch visits every training record once in a seeded random order, in
    mini-batches of ``batch_size``; the step size after t updates is
    ``lr0 / (1 + t / decay_steps)``. Features are z-scored with statistics of the
    training set. Returns the model and the mean training loss after each epoch.

    ``epochs`` defaults to 5000, where the z-scored one- and two-feature recipes
    have settled at desk-scale dataset sizes; the full-length schedule runs 500000
    epochs and is selected by passing it explicitly (``train --epochs 500000``).

    Raises:
        UntrainableError: no usable records, or only one class.
    """
    usable = usable_records(records, recipe)
    dropped = len(records) - len(usable)
    if dropped:
        logger.warning("Excluded %d record(s) with S = 0 from %s training", dropped, recipe.value)
    if not usable:
        raise UntrainableError("Training set is empty")
    labels = np.array([int(r.label) for r in usable])
    if np.unique(labels).size < 2:
        only = Label(int(labels[0])).name.lower()
        raise UntrainableError(f"Training set holds only {only} samples")

    raw = feature_matrix(usable, recipe)
    normalization = fit_normalization(raw)
    x = normalize(raw, normalization)
    y = labels_pm(labels)
    n = y.size

    rng = np.random.default_rng(seed)
    w = np.zeros(recipe.n_features)
    b = 0.0
    step = 0
    curve: list[float] = []
    report_every = max(1, epochs // 10)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            grad_w, grad_b = hinge_gradient(w, b, x[batch], y[batch])
            eta = lr0 / (1.0 + step / decay_steps)
            w = w - eta * grad_w
            b = b - eta * grad_b
            step += 1
        curve.append(hinge_loss(w, b, x, y))
        if epoch % report_every == 0:
            logger.info("Epoch %d/%d: mean hinge loss %.6g", epoch, epochs, curve[-1])

    model = LinearSvmModel(
        recipe=recipe,
        w=w.tolist(),
        b=float(b),
        normalization=normalization,
        training=TrainingInfo(
            epochs=epochs,
            lr0=lr0,
            lr_decay_steps=decay_steps,
            batch=batch_size,
            seed=seed,
            n_train=n,
            dataset_sha=dataset_sha,
        ),
    )
    return model, curve


def decision_function(model: LinearSvmModel, features: np.ndarray | Sequence) -> np.ndarray:
    """Raw margins w.x~ + b on normalized features."""
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if x.shape[1] != model.recipe.n_features:
        # a 1-D sequence of scalars for a one-feature model
        if model.recipe.n_features == 1 and x.shape[0] == 1:
            x = x.T
        else:
            raise RecipeMismatchError(
                f"Recipe {model.recipe.value} expects {model.recipe.n_features} feature(s), "
                f"got {x.shape[1]}"
            )
    return normalize(x, model.normalization) @ np.asarray(model.w) + model.b


def predict(
    model: LinearSvmModel, features: np.ndarray | Sequence
) -> tuple[np.ndarray, np.ndarray]:
    """0/1 labels and margins; chaotic iff the margin is strictly positive."""
    margins = decision_function(model, features)
    return (margins > 0).astype(np.int64), margins


def evaluate(
    model: LinearSvmModel,
    records: Sequence[IndicatorRecord],
    recipe: Optional[FeatureSet] = None,
) -> EvalReport:
    """Compare predictions with the stored SALI labels.

    Raises:
        RecipeMismatchError: ``recipe`` is given and differs from the model's.
    """
    if recipe is not None and recipe is not model.recipe:
        raise RecipeMismatchError(
            f"Model was trained with {model.recipe.value}, evaluation asked for {recipe.value}"
        )
    usable = usable_records(records, model.recipe)
    skipped = len(records) - len(usable)
    if skipped:
        logger.warning("Skipped %d record(s) with S = 0", skipped)
    if not usable:
        return EvalReport(recipe=model.recipe, tp=0, tn=0, fp=0, fn=0, skipped=skipped)

    predicted, margins = predict(model, feature_matrix(usable, model.recipe))
    truth = np.array([int(r.label) for r in usable])
    tp = int(np.sum((predicted == 1) & (truth == 1)))
    tn = int(np.sum((predicted == 0) & (truth == 0)))
    fp = int(np.sum((predicted == 1) & (truth == 0)))
    fn = int(np.sum((predicted == 0) & (truth == 1)))

    cases: dict[str, CaseAccuracy] = {}
    misclassified = []
    for record, guess, margin in zip(usable, predicted, margins):
        name = record.case_name
        entry = cases.get(name) or CaseAccuracy(case=name, value=record.case_value, n=0, correct=0)
        hit = int(guess) == int(record.label)
        cases[name] = entry.model_copy(update={"n": entry.n + 1, "correct": entry.correct + hit})
        if not hit:
            misclassified.append(
                Misclassified(
                    case=name,
                    q1=record.q1,
                    q2=record.q2,
                    margin=float(margin),
                    true_label=record.label,
                )
            )
    return EvalReport(
        recipe=model.recipe,
        tp=tp,
        tn=tn,
        fp=fp,
        fn=fn,
        skipped=skipped,
        per_case=list(cases.values()),
        misclassified=misclassified,
    )


def model_to_json(model: LinearSvmModel) -> str:
    """Model document; floats use the shortest exact decimal."""
    return model.model_dump_json(indent=2) + "\n"


def model_from_json(document: str) -> LinearSvmModel:
    """Parse a model document.

    Raises:
        ModelFormatError: malformed JSON, missing or unsupported version, bad fields.
    """
    try:
        payload = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"Model document is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "version" not in payload:
        raise ModelFormatError("Model document has no version field")
    if payload["version"] != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"Unsupported model version {payload['version']!r} "
            f"(this build reads version {MODEL_FORMAT_VERSION})"
        )
    try:
        return LinearSvmModel.model_validate(payload)
    except ValidationError as exc:
        raise ModelFormatError(f"Malformed model document: {exc}") from exc


def save_model(model: LinearSvmModel, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model_to_json(model), encoding="utf-8")
    logger.info("Wrote %s model to %s", model.recipe.value, path)


def load_model(path: Path) -> LinearSvmModel:
    return model_from_json(Path(path).read_text(encoding="utf-8"))


def subsample(
    records: Sequence[IndicatorRecord], fraction: float, seed: int
) -> list[IndicatorRecord]:
    """Seeded class-stratified subsample keeping at least one record per class present.

    The original record order is preserved.
    """
    if fraction >= 1.0:
        return list(records)
    rng = np.random.default_rng(seed)
    labels = np.array([int(r.label) for r in records])
    keep: list[int] = []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        count = max(1, math.ceil(fraction * members.size))
        keep.extend(rng.permutation(members)[:count].tolist())
    return [records[i] for i in sorted(keep)]


def _accuracy(model: LinearSvmModel, records: Sequence[IndicatorRecord]) -> float:
    return evaluate(model, records).accuracy


def learning_curve(
    train: Sequence[IndicatorRecord],
    test: Sequence[IndicatorRecord],
    recipe: FeatureSet,
    fractions: Sequence[float],
    seed: int = 0,
    epochs: int = 1000,
) -> pd.DataFrame:
    """Train and test accuracy as a function of the training fraction."""
    rows = []
    for fraction in fractions:
        subset = subsample(train, fraction, seed)
        model, _ = fit(subset, recipe, epochs=epochs, seed=seed)
        rows.append(
            {
                "recipe": recipe.value,
                "fraction": fraction,
                "n_train": model.training.n_train,
                "train_accuracy": _accuracy(model, subset),
                "test_accuracy": _accuracy(model, test),
            }
        )
        logger.info(
            "%s at fraction %g: test accuracy %.4f",
            recipe.value,
            fraction,
            rows[-1]["test_accuracy"],
        )
    return pd.DataFrame(
        rows, columns=["recipe", "fraction", "n_train", "train_accuracy", "test_accuracy"]
    )
