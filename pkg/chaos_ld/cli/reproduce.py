"""``reproduce``: train on double-pendulum data, test on the other three systems.

Chains generate -> train -> evaluate at desk scale and writes the transfer
accuracy tables (``table1.csv`` per Henon-Heiles energy, ``table2.csv`` per K,
``table3.csv`` per four-well parameter case) for the log-S model next to the
raw-S model.
"""
import argparse
import logging
from pathlib import Path

import pandas as pd

from chaos_ld.cli.common import CommandContext, add_run_arguments
from chaos_ld.presets import (
    DESK_TRAINING_CASES,
    FOUR_WELL_CASES,
    HENON_HEILES_ENERGIES,
    STANDARD_MAP_K,
    double_pendulum_energies,
    four_well_case,
    four_well_energies,
)
from chaos_ld.schemas.ensemble import EnsembleSpec
from chaos_ld.schemas.indicators import IndicatorRecord
from chaos_ld.schemas.run import ReproduceConfig
from chaos_ld.schemas.svm import FeatureSet, LinearSvmModel
from chaos_ld.schemas.system import SystemSpec
from chaos_ld.services.dataset_io import FLOAT_FORMAT, read_dataset, write_dataset
from chaos_ld.services.ensembles import EnsembleService
from chaos_ld.services.svm import evaluate, fit, model_to_json

logger = logging.getLogger(__name__)

RECIPES = (FeatureSet.LOGS_ONLY, FeatureSet.S_ONLY)


def training_specs(config: ReproduceConfig, context: CommandContext) -> list[EnsembleSpec]:
    """One double-pendulum ensemble per desk parameter case.

    Four fifths of the energy levels sit between the minimum and the index-2
    saddle, the rest in unit steps above it.
    """
    below = config.train_energy_levels * 4 // 5
    above = config.train_energy_levels - below
    specs = []
    for alpha, sigma in DESK_TRAINING_CASES:
        system = SystemSpec.double_pendulum(alpha=alpha, sigma=sigma)
        specs.append(
            EnsembleSpec(
                system=system,
                energies=double_pendulum_energies(system, below=below, above=above),
                n_per_case=config.n_train,
                rng_seed=config.seed,
                integrator=context.integrator,
                **_sali_horizon(config),
            )
        )
    return specs


def four_well_specs(config: ReproduceConfig, context: CommandContext) -> dict[int, EnsembleSpec]:
    """One four-well ensemble per parameter case, over the desk energy ladder."""
    specs = {}
    for case in FOUR_WELL_CASES:
        system = four_well_case(case)
        specs[case] = EnsembleSpec(
            system=system,
            energies=four_well_energies(system, levels=config.four_well_energy_levels),
            n_per_case=config.n_eval,
            rng_seed=config.seed,
            integrator=context.integrator,
            **_sali_horizon(config),
        )
    return specs


def evaluation_specs(config: ReproduceConfig, context: CommandContext) -> dict[str, EnsembleSpec]:
    four_well = {
        f"eval_four_well_{case}": spec for case, spec in four_well_specs(config, context).items()
    }
    return {
        "eval_henon_heiles": EnsembleSpec(
            system=SystemSpec.henon_heiles(),
            energies=list(HENON_HEILES_ENERGIES),
            n_per_case=config.n_eval,
            rng_seed=config.seed,
            integrator=context.integrator,
            **_sali_horizon(config),
        ),
        "eval_standard_map": EnsembleSpec(
            system=SystemSpec.standard_map(STANDARD_MAP_K[0]),
            k_values=list(STANDARD_MAP_K),
            n_per_case=config.n_eval,
            rng_seed=config.seed,
            **_sali_horizon(config),
        ),
    } | four_well


def _sali_horizon(config: ReproduceConfig) -> dict:
    return {} if config.t_sali is None else {"t_sali": config.t_sali}


def _dataset(
    name: str, spec: EnsembleSpec, config: ReproduceConfig, context: CommandContext
) -> list[IndicatorRecord]:
    """Generate a dataset, or reuse the one a previous run left behind."""
    csv_path = context.output_dir / f"{name}.csv"
    if config.skip_existing and csv_path.exists():
        logger.info("Reusing %s", csv_path)
        return read_dataset(csv_path).records
    dataset = EnsembleService(context.settings, context.threads).generate_dataset(spec)
    context.path(f"{name}.json")
    write_dataset(dataset, context.path(f"{name}.csv"))
    return dataset.records


def accuracy_table(
    models: dict[FeatureSet, LinearSvmModel], records: list[IndicatorRecord], column: str
) -> pd.DataFrame:
    """One row per case, one accuracy column per recipe."""
    table: pd.DataFrame | None = None
    for recipe, model in models.items():
        report = evaluate(model, records)
        frame = pd.DataFrame(
            [
                {column: c.value, "n": c.n, f"accuracy_{recipe.value}": c.accuracy}
                for c in report.per_case
            ]
        )
        if table is None:
            table = frame
        else:
            table = table.merge(frame.drop(columns="n"), on=column, how="outer")
    assert table is not None
    return table.sort_values(column, ignore_index=True)


def case_table(
    models: dict[FeatureSet, LinearSvmModel], datasets: dict[int, list[IndicatorRecord]]
) -> pd.DataFrame:
    """One row per parameter case, accuracy pooled over its energies."""
    rows = []
    for case, records in sorted(datasets.items()):
        row: dict = {"case": case}
        for recipe, model in models.items():
            report = evaluate(model, records)
            row.setdefault("n", report.total)
            row[f"accuracy_{recipe.value}"] = report.accuracy
        rows.append(row)
    return pd.DataFrame(rows)


def run_reproduce(config: ReproduceConfig, context: CommandContext) -> None:
    training: list[IndicatorRecord] = []
    for i, spec in enumerate(training_specs(config, context)):
        training.extend(_dataset(f"train_double_pendulum_{i}", spec, config, context))

    models = {}
    for recipe in RECIPES:
        model, _ = fit(training, recipe, epochs=config.epochs, seed=config.seed)
        context.write_text(f"model_{recipe.value}.json", model_to_json(model))
        models[recipe] = model

    evaluation = {
        name: _dataset(name, spec, config, context)
        for name, spec in evaluation_specs(config, context).items()
    }
    tables = {
        "table1.csv": accuracy_table(models, evaluation["eval_henon_heiles"], "energy"),
        "table2.csv": accuracy_table(models, evaluation["eval_standard_map"], "K"),
        "table3.csv": case_table(
            models, {case: evaluation[f"eval_four_well_{case}"] for case in FOUR_WELL_CASES}
        ),
    }
    for name, table in tables.items():
        target = context.path(name)
        table.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        logger.info("Wrote %s", target)
        print(f"{Path(name).stem}:\n{table.to_string(index=False)}")


def register(subparsers: argparse._SubParsersAction) -> None:
    reproduce = subparsers.add_parser(
        "reproduce", help="desk-scale train-on-pendulum, test-elsewhere campaign"
    )
    add_run_arguments(reproduce)
    reproduce.add_argument("--n-train", dest="n_train", type=int, help="ICs per training energy")
    reproduce.add_argument("--n-eval", dest="n_eval", type=int, help="ICs per evaluation case")
    reproduce.add_argument("--train-energy-levels", dest="train_energy_levels", type=int)
    reproduce.add_argument(
        "--four-well-energy-levels",
        dest="four_well_energy_levels",
        type=int,
        help="energies per four-well case",
    )
    reproduce.add_argument("--t-sali", dest="t_sali", type=float)
    reproduce.add_argument("--epochs", type=int)
    reproduce.add_argument(
        "--no-skip-existing",
        dest="skip_existing",
        action="store_const",
        const=False,
        help="regenerate datasets even when their files exist",
    )
    reproduce.set_defaults(handler=run_reproduce, config_model=ReproduceConfig)
