"""``generate`` and ``threshold`` sub-commands."""
import argparse
import logging
import time

import numpy as np
import pandas as pd

from chaos_ld.cli.common import CommandContext, add_run_arguments, add_system_arguments
from chaos_ld.schemas.ensemble import EnsembleSpec
from chaos_ld.schemas.run import GenerateConfig, ThresholdConfig
from chaos_ld.services.dataset_io import read_dataset, write_dataset
from chaos_ld.services.ensembles import EnsembleService
from chaos_ld.services.threshold import find_threshold, relabel_dataset

logger = logging.getLogger(__name__)


def ensemble_spec_from(config: GenerateConfig, context: CommandContext) -> EnsembleSpec:
    """Translate command-line options into an ensemble description."""
    system = config.to_system()
    fields: dict = {
        "system": system,
        "n_per_case": config.n,
        "rng_seed": config.seed,
        "integrator": context.integrator,
        "stencil_sigma": config.stencil_sigma or context.settings.stencil_sigma,
        "sali_sample_ratio": context.settings.sali_sample_ratio,
    }
    if config.threshold is not None:
        fields["sali_threshold"] = config.threshold
    if system.is_map:
        fields["k_values"] = config.K
        horizon = config.iters if config.iters is not None else config.tau
        if horizon is not None:
            fields["tau_ld"] = float(int(horizon))
    else:
        fields["energies"] = config.energy
        fields["relative_energies"] = config.relative_energies
        if config.tau is not None:
            fields["tau_ld"] = config.tau
    fields["t_sali"] = config.t_sali
    return EnsembleSpec.model_validate({k: v for k, v in fields.items() if v is not None})


def run_generate(config: GenerateConfig, context: CommandContext) -> None:
    spec = ensemble_spec_from(config, context)
    started = time.perf_counter()
    dataset = EnsembleService(context.settings, context.threads).generate_dataset(spec)
    csv_path = context.path(f"{config.name}.csv")
    context.path(f"{config.name}.json")
    write_dataset(dataset, csv_path)
    metadata = dataset.metadata
    assert metadata is not None
    counts = metadata.label_counts
    print(
        f"{len(dataset)} records (regular {counts['regular']}, chaotic {counts['chaotic']}), "
        f"{metadata.discarded_count} discarded, {time.perf_counter() - started:.1f} s"
    )


def run_threshold(config: ThresholdConfig, context: CommandContext) -> None:
    dataset = read_dataset(config.dataset)
    if config.column == "log10_S":
        values = [r.log10_S for r in dataset.records if r.log10_S is not None]
    else:
        values = [r.sali_log10 for r in dataset.records]
    result = find_threshold(values, bins=config.bins, smoothing=config.smoothing)
    context.write_text("threshold.json", result.model_dump_json(indent=2) + "\n")
    edges = result.bin_edges
    histogram = pd.DataFrame(
        {"bin_lo": edges[:-1], "bin_hi": edges[1:], "count": result.counts},
    )
    histogram.to_csv(
        context.path("histogram.csv"), index=False, float_format="%.17g", lineterminator="\n"
    )
    relabeled = relabel_dataset(dataset, result.threshold, config.column)
    agreement = float(
        np.mean([a.label == b.label for a, b in zip(relabeled.records, dataset.records)])
    )
    if config.output:
        context.path(f"{config.output}.json")
        write_dataset(relabeled, context.path(f"{config.output}.csv"))
    print(
        f"threshold {result.threshold:.6g} between peaks {result.peaks[0]:.4g} and "
        f"{result.peaks[1]:.4g} ({'converged' if result.converged else 'not converged'}, "
        f"{result.iterations} refinements); agreement with SALI labels {agreement:.2%}"
    )


def register(subparsers: argparse._SubParsersAction) -> None:
    generate = subparsers.add_parser("generate", help="sample, propagate and label an ensemble")
    add_run_arguments(generate)
    add_system_arguments(generate)
    generate.add_argument("--energy", type=float, nargs="+")
    generate.add_argument(
        "--relative-energies",
        dest="relative_energies",
        action="store_const",
        const=True,
        help="energies are measured from the potential minimum",
    )
    generate.add_argument("--n", type=int, help="initial conditions per case")
    generate.add_argument("--iters", type=int, help="map iterations for the descriptor")
    generate.add_argument("--tau", type=float, help="descriptor horizon")
    generate.add_argument("--t-sali", dest="t_sali", type=float, help="SALI horizon")
    generate.add_argument("--threshold", type=float, help="log10 SALI labeling threshold")
    generate.add_argument("--stencil-sigma", dest="stencil_sigma", type=float)
    generate.add_argument("--name", help="output file stem")
    generate.set_defaults(handler=run_generate, config_model=GenerateConfig)

    threshold = subparsers.add_parser("threshold", help="histogram valley of a dataset column")
    add_run_arguments(threshold)
    threshold.add_argument("--dataset")
    threshold.add_argument("--column", choices=["log10_S", "sali_log10"])
    threshold.add_argument("--bins", type=int)
    threshold.add_argument("--smoothing", type=int)
    threshold.add_argument(
        "--output", help="also write the dataset relabeled by the threshold as <OUTPUT>.csv"
    )
    threshold.set_defaults(handler=run_threshold, config_model=ThresholdConfig)

