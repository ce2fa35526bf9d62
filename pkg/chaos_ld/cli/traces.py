"""Plot-data sub-commands: ``poincare``, ``sali-trace`` and ``indicator-trace``."""
import argparse
import logging

import pandas as pd

from chaos_ld.cli.common import (
    CommandContext,
    add_run_arguments,
    add_system_arguments,
    orbit_state,
    require_energy,
)
from chaos_ld.exceptions import InfeasibleStateError, IntegrationError
from chaos_ld.schemas.ensemble import DEFAULT_SALI_THRESHOLD
from chaos_ld.schemas.indicators import SaliTraceReport
from chaos_ld.schemas.run import IndicatorTraceConfig, PoincareConfig, SaliTraceConfig
from chaos_ld.schemas.system import SectionSpec
from chaos_ld.services.dataset_io import FLOAT_FORMAT
from chaos_ld.services.ensembles import draw_point, per_sample_rng, sampling_box
from chaos_ld.services.indicators import indicator_evolution, label_by_sali, with_fitted_rate
from chaos_ld.services.propagation import map_orbit, poincare_section, sali

logger = logging.getLogger(__name__)


def _write_frame(frame: pd.DataFrame, context: CommandContext, name: str) -> None:
    target = context.path(name)
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %d rows to %s", len(frame), target)


def run_poincare(config: PoincareConfig, context: CommandContext) -> None:
    system = config.to_system()
    section = None if system.is_map else SectionSpec.default_for(config.system)
    require_energy(system, config.energy)
    ics = list(config.ic)
    if not ics:
        box = sampling_box(system, section, config.energy)
        for i in range(config.n):
            rng = per_sample_rng(config.seed, 0, i)
            point, _ = draw_point(rng, system, section, config.energy, box)
            ics.append(point)

    frames = []
    for orbit_id, ic in enumerate(ics):
        try:
            _, state = orbit_state(config, system, ic, config.energy)
            if system.is_map:
                points = map_orbit(system, state, config.crossings)
            else:
                assert section is not None
                points = poincare_section(
                    system, state, section, config.crossings, config.t_max, context.integrator
                )
        except (InfeasibleStateError, IntegrationError) as exc:
            logger.warning("Orbit %d (%g, %g) skipped: %s", orbit_id, ic[0], ic[1], exc)
            continue
        frames.append(
            pd.DataFrame({"orbit_id": orbit_id, "q1": points[:, 0], "q2": points[:, 1]})
        )
    columns = ["orbit_id", "q1", "q2"]
    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)
    _write_frame(table[columns], context, f"{config.name}.csv")


def run_sali_trace(config: SaliTraceConfig, context: CommandContext) -> None:
    system = config.to_system()
    _, state = orbit_state(config, system, config.ic, config.energy)
    series, fit = with_fitted_rate(
        sali(system, state, config.t_max, context.integrator), system.kind
    )
    _write_frame(
        pd.DataFrame({"t": series.times, "log10_sali": series.log10_sali}),
        context,
        f"{config.name}.csv",
    )
    threshold = DEFAULT_SALI_THRESHOLD[system.kind]
    report = SaliTraceReport(
        system=system.describe(),
        final=series.final,
        floor_hit=series.floor_hit,
        threshold=threshold,
        label=label_by_sali(series.final, threshold, series.floor_hit),
        fitted_rate=series.fitted_rate,
        fit=fit,
    )
    context.write_text(f"{config.name}_fit.json", report.model_dump_json(indent=2) + "\n")
    print(
        f"final log10 SALI {series.final:.4g} -> {report.label.name.lower()}"
        + (f", {fit.regime} fit" if fit else "")
    )


def run_indicator_trace(config: IndicatorTraceConfig, context: CommandContext) -> None:
    system = config.to_system()
    section = None if system.is_map else SectionSpec.default_for(config.system)
    require_energy(system, config.energy)
    sigma = config.stencil_sigma or context.settings.stencil_sigma
    horizons = [float(int(t)) for t in config.taus] if system.is_map else config.taus
    table = indicator_evolution(
        system, section, config.ic, config.energy, horizons, sigma, context.integrator
    )
    _write_frame(table, context, f"{config.name}.csv")


def _orbit_arguments(parser: argparse.ArgumentParser) -> None:
    add_run_arguments(parser)
    add_system_arguments(parser)
    parser.add_argument("--energy", type=float)
    parser.add_argument("--name", help="output file stem")


def register(subparsers: argparse._SubParsersAction) -> None:
    poincare = subparsers.add_parser("poincare", help="section crossings or map iterates")
    _orbit_arguments(poincare)
    poincare.add_argument(
        "--ic", type=float, nargs=2, action="append", metavar=("Q", "P"), help="repeatable"
    )
    poincare.add_argument("--n", type=int, help="seeded initial conditions when no --ic")
    poincare.add_argument("--crossings", type=int, help="crossings (or iterates) per orbit")
    poincare.add_argument("--t-max", dest="t_max", type=float)
    poincare.set_defaults(handler=run_poincare, config_model=PoincareConfig)

    trace = subparsers.add_parser("sali-trace", help="SALI time series of one orbit")
    _orbit_arguments(trace)
    trace.add_argument("--ic", type=float, nargs=2, metavar=("Q", "P"))
    trace.add_argument("--t-max", dest="t_max", type=float, help="time (iterations for the map)")
    trace.set_defaults(handler=run_sali_trace, config_model=SaliTraceConfig)

    evolution = subparsers.add_parser("indicator-trace", help="D, R, C, S against the horizon")
    _orbit_arguments(evolution)
    evolution.add_argument("--ic", type=float, nargs=2, metavar=("Q", "P"))
    evolution.add_argument("--taus", type=float, nargs="+")
    evolution.add_argument("--stencil-sigma", dest="stencil_sigma", type=float)
    evolution.set_defaults(handler=run_indicator_trace, config_model=IndicatorTraceConfig)

