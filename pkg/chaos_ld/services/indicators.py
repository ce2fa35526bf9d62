"""Neighbor-grid chaos indicators and SALI-based labeling."""
import logging
import math
from collections.abc import Sequence
from typing import Optional

import numpy as np
import pandas as pd

from chaos_ld.config import get_settings
from chaos_ld.exceptions import (
    ConfigurationError,
    DegenerateCenterError,
    InfeasibleStateError,
    InsufficientDataError,
    StencilInfeasibleError,
)
from chaos_ld.schemas.indicators import (
    AsymptoteFit,
    IndicatorRecord,
    IndicatorValues,
    Label,
    NeighborStencil,
)
from chaos_ld.schemas.propagation import Direction, IntegratorConfig, SaliSeries
from chaos_ld.schemas.system import SectionSpec, SystemKind, SystemSpec
from chaos_ld.services import kernels
from chaos_ld.services.propagation import forward_ld, iterate_map_ld, propagate_ld, sali
from chaos_ld.services.systems import solve_constrained_momentum

logger = logging.getLogger(__name__)

LOG10_E = math.log10(math.e)
_MIN_FIT_SAMPLES = 10
# fit window spans the last two decades of the series
_FIT_WINDOW_DECADES = 2.0


def _pair(sigma: float | Sequence[float]) -> tuple[float, float]:
    if isinstance(sigma, (int, float)):
        pair = (float(sigma), float(sigma))
    else:
        pair = (float(sigma[0]), float(sigma[1]))
    if min(pair) <= 0:
        raise ConfigurationError("Stencil spacing must be positive")
    return pair


def _wrap(v: float) -> float:
    return float(kernels.wrap_unit(v))


def build_stencil(
    system: SystemSpec,
    section: Optional[SectionSpec],
    x0: Sequence[float],
    energy_level: Optional[float],
    sigma: float | Sequence[float],
) -> NeighborStencil:
    """Center plus neighbors x0 +- sigma_i e_i, embedded in phase space.

    Map neighbors wrap onto the torus. Continuous neighbors get their constrained
    momentum re-solved, so all five points share the energy ``energy_level``.

    Raises:
        StencilInfeasibleError: if a stencil point lies outside the energy shell.
    """
    s1, s2 = _pair(sigma)
    cx, cy = float(x0[0]), float(x0[1])
    points = [(cx, cy), (cx + s1, cy), (cx - s1, cy), (cx, cy + s2), (cx, cy - s2)]
    if system.is_map:
        points = [(_wrap(x), _wrap(y)) for x, y in points]
        states = [[x, y] for x, y in points]
    else:
        if section is None or energy_level is None:
            raise ConfigurationError("Continuous stencils need a section and an energy")
        states = []
        for point in points:
            try:
                states.append(
                    solve_constrained_momentum(system, section, point, energy_level).tolist()
                )
            except InfeasibleStateError as exc:
                raise StencilInfeasibleError(f"Stencil around ({cx:.6g}, {cy:.6g}): {exc}") from exc
    return NeighborStencil(center=points[0], sigma=(s1, s2), points=points, states=states)


def compute_indicators(
    ld_center: float, ld_neighbors: Sequence[float], sigma: float | Sequence[float]
) -> IndicatorValues:
    """D, R, C and S from the center descriptor and its neighbors (+e1, -e1, +e2, -e2)."""
    if len(ld_neighbors) != 4:
        raise ConfigurationError("Indicators need exactly four neighbor descriptors")
    if ld_center <= 0:
        raise DegenerateCenterError("Center descriptor is zero; D and R are undefined")
    s = _pair(sigma)
    n = 2
    l0 = float(ld_center)
    plus = (float(ld_neighbors[0]), float(ld_neighbors[2]))
    minus = (float(ld_neighbors[1]), float(ld_neighbors[3]))
    d_sum = sum(abs(l0 - plus[i]) + abs(l0 - minus[i]) for i in range(n))
    r_sum = sum(plus[i] + minus[i] for i in range(n))
    c_sum = sum(abs(plus[i] - minus[i]) / s[i] for i in range(n))
    s_sum = sum(abs(plus[i] - 2.0 * l0 + minus[i]) / (s[i] * s[i]) for i in range(n))
    return IndicatorValues(
        D=d_sum / (2 * n * l0),
        R=abs(1.0 - r_sum / (2 * n * l0)),
        C=c_sum / (2 * n),
        S=s_sum / n,
    )


def label_by_sali(sali_log10_final: float, threshold: float, floor_hit: bool = False) -> Label:
    """Chaotic iff the final log10 SALI lies below ``threshold`` (or the floor was hit)."""
    if floor_hit or sali_log10_final < threshold:
        return Label.CHAOTIC
    return Label.REGULAR


def fit_sali_asymptote(
    series: SaliSeries,
    kind: SystemKind,
    window: Optional[tuple[float, float]] = None,
    floor: Optional[float] = None,
) -> AsymptoteFit:
    """Least-squares fits of the long-time SALI behavior.

    Both a power law (log10 SALI against log10 t) and an exponential (log10 SALI
    against t) are fitted over the pre-floor part of the window, by default the last
    two decades of the series. A floor hit means exponential decay; for flows a
    log-log slope below 0.5 in magnitude is a plateau; otherwise the better fit wins.

    Raises:
        InsufficientDataError: if fewer than 10 pre-floor samples lie in the window.
    """
    floor_log = math.log10(floor if floor is not None else get_settings().sali_floor)
    times = np.asarray(series.times)
    values = np.asarray(series.log10_sali)
    usable = (times > 0) & (values > floor_log)
    if not usable.any():
        raise InsufficientDataError("SALI series has no samples above the floor")
    t_end = float(times[usable].max())
    if window is None:
        window = (max(1.0, t_end / 10**_FIT_WINDOW_DECADES), t_end)
    mask = usable & (times >= window[0]) & (times <= window[1])
    count = int(mask.sum())
    if count < _MIN_FIT_SAMPLES:
        raise InsufficientDataError(
            f"Only {count} pre-floor samples in the fit window, need {_MIN_FIT_SAMPLES}"
        )
    t = times[mask]
    v = values[mask]
    power_coef, power_rss = _linear_fit(np.log10(t), v)
    exp_coef, exp_rss = _linear_fit(t, v)
    late = v[t >= 0.5 * t.max()]
    plateau = float(late.mean()) if late.size else float(v[-1])

    if series.floor_hit:
        regime = "exponential"
    elif not kind.is_map and abs(power_coef) < 0.5:
        regime = "plateau"
    elif exp_rss < power_rss:
        regime = "exponential"
    else:
        regime = "power_law"
    lyapunov = None
    if regime == "exponential":
        # SALI ~ exp(-(l1 - l2) t) for flows (l2 = 0), exp(-2 l1 n) for 2D maps
        factor = 2.0 if kind.is_map else 1.0
        lyapunov = -exp_coef / (factor * LOG10_E)
    return AsymptoteFit(
        regime=regime,
        power_slope=power_coef,
        exponential_rate=exp_coef,
        plateau=plateau,
        lyapunov_estimate=lyapunov,
        n_samples=count,
        window=(float(window[0]), float(window[1])),
    )


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Slope and residual sum of squares of a least-squares line."""
    coef, residuals, *_ = np.polyfit(x, y, 1, full=True)
    rss = float(residuals[0]) if residuals.size else 0.0
    return float(coef[0]), rss


def with_fitted_rate(
    series: SaliSeries, kind: SystemKind
) -> tuple[SaliSeries, Optional[AsymptoteFit]]:
    """``series`` with ``fitted_rate`` filled in, and the fit behind it.

    A series too short to fit comes back unchanged, with no fit.
    """
    try:
        fit = fit_sali_asymptote(series, kind)
    except InsufficientDataError as exc:
        logger.warning("No asymptote fit: %s", exc)
        return series, None
    return series.model_copy(update={"fitted_rate": fit.rate}), fit


def stencil_lds(
    system: SystemSpec,
    stencil: NeighborStencil,
    horizon: float,
    config: Optional[IntegratorConfig] = None,
) -> list[float]:
    """Forward descriptors of the five stencil points."""
    return [forward_ld(system, state, horizon, config) for state in stencil.states]


def evaluate_record(
    system: SystemSpec,
    section: Optional[SectionSpec],
    x0: Sequence[float],
    energy_level: Optional[float],
    tau_ld: float,
    t_sali: float,
    threshold: float,
    sigma: float | Sequence[float] = 1e-4,
    config: Optional[IntegratorConfig] = None,
    sample_stride: Optional[float] = None,
) -> IndicatorRecord:
    """Stencil, five forward descriptors, indicators and SALI label for one sample."""
    stencil = build_stencil(system, section, x0, energy_level, sigma)
    lds = stencil_lds(system, stencil, tau_ld, config)
    values = compute_indicators(lds[0], lds[1:], stencil.sigma)
    series = sali(system, stencil.states[0], t_sali, config, sample_stride)
    label = label_by_sali(series.final, threshold, series.floor_hit)
    return IndicatorRecord(
        system=system,
        energy=None if system.is_map else energy_level,
        q1=stencil.center[0],
        q2=stencil.center[1],
        ld_center=lds[0],
        ld_neighbors=(lds[1], lds[2], lds[3], lds[4]),
        D=values.D,
        R=values.R,
        C=values.C,
        S=values.S,
        sali_log10=series.final,
        label=label,
        horizon=tau_ld,
    )


def indicator_evolution(
    system: SystemSpec,
    section: Optional[SectionSpec],
    x0: Sequence[float],
    energy_level: Optional[float],
    horizons: Sequence[float],
    sigma: float | Sequence[float] = 1e-4,
    config: Optional[IntegratorConfig] = None,
) -> pd.DataFrame:
    """D, R, C and S recomputed at increasing descriptor horizons.

    Descriptors are accumulated piecewise between consecutive horizons, so the total
    cost is that of the longest one.
    """
    grid = [float(h) for h in horizons]
    if not grid or grid[0] <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigurationError("Horizons must be positive and strictly increasing")
    if system.is_map and any(h != int(h) for h in grid):
        raise ConfigurationError("Map horizons are whole iteration counts")
    stencil = build_stencil(system, section, x0, energy_level, sigma)
    states = [np.asarray(s, dtype=np.float64) for s in stencil.states]
    totals = [0.0] * len(states)
    rows = []
    previous = 0.0
    for horizon in grid:
        span = horizon - previous
        for i, state in enumerate(states):
            if system.is_map:
                states[i], ld = iterate_map_ld(system, state, int(span), Direction.FORWARD)
            else:
                states[i], ld = propagate_ld(system, state, span, Direction.FORWARD, config)
            totals[i] += ld
        previous = horizon
        try:
            values = compute_indicators(totals[0], totals[1:], stencil.sigma)
        except DegenerateCenterError:
            logger.warning("Center descriptor vanishes at horizon %g; row skipped", horizon)
            continue
        rows.append(
            {
                "tau": horizon,
                "ld_center": totals[0],
                "D": values.D,
                "R": values.R,
                "C": values.C,
                "S": values.S,
                "log10_S": math.log10(values.S) if values.S > 0 else math.nan,
            }
        )
    return pd.DataFrame(rows, columns=["tau", "ld_center", "D", "R", "C", "S", "log10_S"])
