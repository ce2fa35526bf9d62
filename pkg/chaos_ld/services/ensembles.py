"""Initial-condition ensembles and labeled dataset generation."""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional

import numpy as np

from chaos_ld import __version__
from chaos_ld.config import Settings, get_settings
from chaos_ld.exceptions import (
    DegenerateCenterError,
    DegenerateEnergyError,
    IntegrationError,
    StencilInfeasibleError,
)
from chaos_ld.schemas.ensemble import (
    DatasetMetadata,
    EnsembleCase,
    EnsembleSpec,
    LabeledDataset,
)
from chaos_ld.schemas.indicators import IndicatorRecord
from chaos_ld.schemas.system import SectionSpec, SystemSpec
from chaos_ld.services.indicators import evaluate_record
from chaos_ld.services.systems import (
    is_feasible,
    potential_minimum,
    slice_bounds,
    solve_constrained_momentum,
)

logger = logging.getLogger(__name__)

# a sample giving up after this many draws means an acceptance rate below 1e-4
MAX_DRAWS_PER_SAMPLE = 10_000

Box = tuple[tuple[float, float], tuple[float, float]]
_UNIT_BOX: Box = ((0.0, 1.0), (0.0, 1.0))


class EnsembleSample(NamedTuple):
    """One drawn initial condition."""

    case_index: int
    sample_index: int
    point: tuple[float, float]
    state: np.ndarray
    energy: Optional[float]


class _Outcome(NamedTuple):
    record: Optional[IndicatorRecord]
    attempts: int
    discarded: int
    failed: int


def per_sample_rng(seed: int, case_index: int, sample_index: int) -> np.random.Generator:
    """Independent generator keyed by (seed, case, sample), so draws are order-free."""
    return np.random.default_rng(np.random.SeedSequence([seed, case_index, sample_index]))


def resolve_cases(spec: EnsembleSpec) -> list[EnsembleCase]:
    """Cases with absolute energies."""
    cases = spec.cases()
    if spec.relative_energies and not spec.system.is_map:
        offset = potential_minimum(spec.system)[1]
        cases = [
            EnsembleCase(index=c.index, system=c.system, energy=float(c.energy) + offset)
            for c in cases
            if c.energy is not None
        ]
    return cases


def sampling_box(
    system: SystemSpec, section: Optional[SectionSpec], energy: Optional[float]
) -> Box:
    """Slice-plane box the rejection sampler draws from."""
    if system.is_map:
        return _UNIT_BOX
    assert section is not None and energy is not None
    return slice_bounds(system, section, energy)


def draw_point(
    rng: np.random.Generator,
    system: SystemSpec,
    section: Optional[SectionSpec],
    energy: Optional[float],
    box: Box,
) -> tuple[tuple[float, float], np.ndarray]:
    """Uniform rejection draw of one feasible slice point and its embedded state.

    Raises:
        DegenerateEnergyError: if no feasible point turns up in 10^4 draws.
    """
    (q_lo, q_hi), (p_lo, p_hi) = box
    if system.is_map:
        u = rng.random(2)
        point = (float(u[0]), float(u[1]))
        return point, np.array(point)
    assert section is not None and energy is not None
    for _ in range(MAX_DRAWS_PER_SAMPLE):
        u = rng.random(2)
        point = (q_lo + u[0] * (q_hi - q_lo), p_lo + u[1] * (p_hi - p_lo))
        if is_feasible(system, section, point, energy):
            return point, solve_constrained_momentum(system, section, point, energy)
    raise DegenerateEnergyError(
        f"Feasibility rate below 1e-4 for {system.describe()} at E={energy:.6g}"
    )


def sample_ensemble(spec: EnsembleSpec) -> list[EnsembleSample]:
    """``n_per_case`` feasible initial conditions per case, in (case, sample) order."""
    section = spec.resolved_section
    samples = []
    for case in resolve_cases(spec):
        box = sampling_box(case.system, section, case.energy)
        for i in range(spec.n_per_case):
            rng = per_sample_rng(spec.rng_seed, case.index, i)
            point, state = draw_point(rng, case.system, section, case.energy, box)
            samples.append(EnsembleSample(case.index, i, point, state, case.energy))
    return samples


class EnsembleService:
    """Generates labeled datasets on a thread pool."""

    def __init__(self, settings: Optional[Settings] = None, threads: Optional[int] = None):
        self.settings = settings or get_settings()
        self.threads = threads or self.settings.threads

    def generate_dataset(self, spec: EnsembleSpec) -> LabeledDataset:
        """Sample, propagate and label every initial condition of ``spec``.

        Infeasible stencils and degenerate centers are discarded and redrawn from the
        same per-sample stream; propagation failures are logged and skipped. Records
        come back in (case, sample) order whatever the thread count.
        """
        section = spec.resolved_section
        cases = resolve_cases(spec)
        boxes = {c.index: sampling_box(c.system, section, c.energy) for c in cases}
        tasks = [(case, i) for case in cases for i in range(spec.n_per_case)]
        started = time.perf_counter()
        logger.info(
            "Generating %d samples (%d case(s)) for %s on %d thread(s)",
            len(tasks),
            len(cases),
            spec.system.kind.value,
            self.threads,
        )

        def work(task: tuple[EnsembleCase, int]) -> _Outcome:
            case, index = task
            return self._evaluate_sample(spec, section, case, boxes[case.index], index)

        outcomes: list[_Outcome] = []
        step = max(1, len(tasks) // 10)
        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            for done, outcome in enumerate(executor.map(work, tasks), start=1):
                outcomes.append(outcome)
                if done % step == 0:
                    logger.info("Processed %d/%d samples", done, len(tasks))

        records = [o.record for o in outcomes if o.record is not None]
        attempts = sum(o.attempts for o in outcomes)
        discarded = sum(o.discarded for o in outcomes)
        failed = sum(o.failed for o in outcomes)
        if discarded:
            logger.info(
                "Discarded %d sample(s), %d of them propagation failures", discarded, failed
            )
        dataset = LabeledDataset(records=records)
        dataset.metadata = DatasetMetadata(
            spec=spec,
            package_version=__version__,
            record_count=len(records),
            attempts=attempts,
            discarded_count=discarded,
            failed_count=failed,
            label_counts=dataset.label_counts(),
        )
        logger.info(
            "Generated %d records in %.1f s: %s",
            len(records),
            time.perf_counter() - started,
            dataset.metadata.label_counts,
        )
        return dataset

    def _evaluate_sample(
        self,
        spec: EnsembleSpec,
        section: Optional[SectionSpec],
        case: EnsembleCase,
        box: Box,
        index: int,
    ) -> _Outcome:
        rng = per_sample_rng(spec.rng_seed, case.index, index)
        attempts = discarded = 0
        for _ in range(spec.max_resamples):
            point, _ = draw_point(rng, case.system, section, case.energy, box)
            attempts += 1
            try:
                record = evaluate_record(
                    case.system,
                    section,
                    point,
                    case.energy,
                    spec.resolved_tau,
                    spec.t_sali,
                    spec.resolved_threshold,
                    spec.stencil_sigma,
                    spec.integrator,
                    spec.sali_sample_ratio,
                )
            except (StencilInfeasibleError, DegenerateCenterError) as exc:
                discarded += 1
                logger.debug("Case %d sample %d redrawn: %s", case.index, index, exc)
                continue
            except IntegrationError as exc:
                logger.warning(
                    "Case %d sample %d skipped, integration failed at t=%.6g",
                    case.index,
                    index,
                    exc.t_reached,
                )
                return _Outcome(None, attempts, discarded + 1, 1)
            if record.S == 0:
                logger.warning(
                    "Case %d sample %d has S = 0; excluded from log-feature training",
                    case.index,
                    index,
                )
            return _Outcome(record, attempts, discarded, 0)
        logger.warning(
            "Case %d sample %d gave up after %d infeasible stencils",
            case.index,
            index,
            spec.max_resamples,
        )
        return _Outcome(None, attempts, discarded, 0)


def generate_dataset(spec: EnsembleSpec, threads: Optional[int] = None) -> LabeledDataset:
    """Module-level shortcut for ``EnsembleService().generate_dataset``."""
    return EnsembleService(threads=threads).generate_dataset(spec)
