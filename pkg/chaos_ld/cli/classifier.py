"""``train``, ``evaluate`` and ``learning-curve`` sub-commands."""
import argparse
import logging

import pandas as pd

from chaos_ld.cli.common import CommandContext, add_run_arguments
from chaos_ld.schemas.run import EvaluateConfig, LearningCurveConfig, TrainConfig
from chaos_ld.schemas.svm import EvalReport, FeatureSet
from chaos_ld.services.dataset_io import FLOAT_FORMAT, datasets_sha256, read_datasets
from chaos_ld.services.svm import (
    evaluate,
    fit,
    learning_curve,
    load_model,
    model_to_json,
    subsample,
)

logger = logging.getLogger(__name__)


def _to_csv(frame: pd.DataFrame, context: CommandContext, name: str) -> None:
    target = context.path(name)
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %s", target)


def run_train(config: TrainConfig, context: CommandContext) -> None:
    records = read_datasets(config.datasets).records
    subset = subsample(records, config.train_fraction, config.seed)
    logger.info("Training %s on %d of %d records", config.recipe.value, len(subset), len(records))
    model, curve = fit(
        subset,
        config.recipe,
        epochs=config.epochs,
        lr0=config.lr0,
        decay_steps=config.lr_decay_steps,
        batch_size=config.batch,
        seed=config.seed,
        dataset_sha=datasets_sha256(config.datasets),
    )
    stem = config.name or f"model_{config.recipe.value}"
    context.write_text(f"{stem}.json", model_to_json(model))
    _to_csv(
        pd.DataFrame({"epoch": range(1, len(curve) + 1), "mean_hinge_loss": curve}),
        context,
        f"{stem}_curve.csv",
    )
    print(f"{config.recipe.value}: final mean hinge loss {curve[-1]:.6g} on {len(subset)} records")


def report_tables(report: EvalReport) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Per-case accuracy table and misclassified-sample table."""
    accuracy = pd.DataFrame(
        [
            {
                "case": c.case,
                "value": c.value,
                "n": c.n,
                "correct": c.correct,
                "accuracy": c.accuracy,
            }
            for c in report.per_case
        ],
        columns=["case", "value", "n", "correct", "accuracy"],
    )
    misclassified = pd.DataFrame(
        [
            {
                "case": m.case,
                "q1": m.q1,
                "q2": m.q2,
                "margin": m.margin,
                "true_label": int(m.true_label),
            }
            for m in report.misclassified
        ],
        columns=["case", "q1", "q2", "margin", "true_label"],
    )
    return accuracy, misclassified


def run_evaluate(config: EvaluateConfig, context: CommandContext) -> None:
    model = load_model(config.model)
    records = read_datasets(config.datasets).records
    report = evaluate(model, records, config.recipe)
    context.write_text(f"{config.name}.json", report.model_dump_json(indent=2) + "\n")
    accuracy, misclassified = report_tables(report)
    _to_csv(accuracy, context, f"{config.name}_accuracy.csv")
    _to_csv(misclassified, context, f"{config.name}_misclassified.csv")
    print(
        f"accuracy {report.accuracy:.4f} on {report.total} records "
        f"(TP {report.tp}, TN {report.tn}, FP {report.fp}, FN {report.fn}, "
        f"skipped {report.skipped})"
    )
    for case in report.per_case:
        print(f"  {case.case}: {case.accuracy:.4f} ({case.correct}/{case.n})")


def run_learning_curve(config: LearningCurveConfig, context: CommandContext) -> None:
    train = read_datasets(config.train).records
    test = read_datasets(config.test).records
    frames = [
        learning_curve(train, test, recipe, config.fractions, config.seed, config.epochs)
        for recipe in config.recipes
    ]
    _to_csv(pd.concat(frames, ignore_index=True), context, f"{config.name}.csv")


def register(subparsers: argparse._SubParsersAction) -> None:
    recipes = [r.value for r in FeatureSet]

    train = subparsers.add_parser("train", help="fit a linear classifier")
    add_run_arguments(train)
    train.add_argument("--datasets", nargs="+")
    train.add_argument("--recipe", choices=recipes)
    train.add_argument("--epochs", type=int)
    train.add_argument("--lr0", type=float)
    train.add_argument("--lr-decay-steps", dest="lr_decay_steps", type=float)
    train.add_argument("--batch", type=int)
    train.add_argument("--train-fraction", dest="train_fraction", type=float)
    train.add_argument("--name", help="model file stem")
    train.set_defaults(handler=run_train, config_model=TrainConfig)

    evaluate_parser = subparsers.add_parser("evaluate", help="score a model on datasets")
    add_run_arguments(evaluate_parser)
    evaluate_parser.add_argument("--model")
    evaluate_parser.add_argument("--datasets", nargs="+")
    evaluate_parser.add_argument("--recipe", choices=recipes)
    evaluate_parser.add_argument("--name", help="report file stem")
    evaluate_parser.set_defaults(handler=run_evaluate, config_model=EvaluateConfig)

    curve = subparsers.add_parser("learning-curve", help="accuracy against training fraction")
    add_run_arguments(curve)
    curve.add_argument("--train", nargs="+")
    curve.add_argument("--test", nargs="+")
    curve.add_argument("--recipes", nargs="+", choices=recipes)
    curve.add_argument("--fractions", type=float, nargs="+")
    curve.add_argument("--epochs", type=int)
    curve.add_argument("--name", help="output file stem")
    curve.set_defaults(handler=run_learning_curve, config_model=LearningCurveConfig)
