"""Trajectory, descriptor and SALI propagation.

Thin wrappers over the compiled drivers in ``kernels``: they validate inputs, set up
the augmented state, and turn status codes into exceptions.
"""
import logging
import math
from typing import Optional

import numpy as np

from chaos_ld.config import get_settings
from chaos_ld.exceptions import ConfigurationError, IntegrationError, UnsupportedOperationError
from chaos_ld.schemas.propagation import Direction, IntegratorConfig, SaliSeries
from chaos_ld.schemas.system import SectionSpec, SystemSpec
from chaos_ld.services import kernels
from chaos_ld.services.systems import section_period, slice_point_of

logger = logging.getLogger(__name__)

_SALI_FIRST_SAMPLE = 1.0


def default_integrator() -> IntegratorConfig:
    """Integrator settings from the environment."""
    return IntegratorConfig.from_settings(get_settings())


def _continuous_state(
    system: SystemSpec, state: np.ndarray | list[float], operation: str
) -> np.ndarray:
    if system.is_map:
        raise UnsupportedOperationError(
            f"{operation} needs a continuous system; use the map iterators"
        )
    s = np.asarray(state, dtype=np.float64)
    if s.shape != (4,):
        raise ConfigurationError(f"Continuous states have length 4, got shape {s.shape}")
    return s


def _map_state(
    system: SystemSpec, state: np.ndarray | list[float], operation: str
) -> tuple[float, float]:
    if not system.is_map:
        raise UnsupportedOperationError(f"{operation} is only defined for the standard map")
    s = np.asarray(state, dtype=np.float64)
    if s.shape != (2,):
        raise ConfigurationError(f"Map states have length 2, got shape {s.shape}")
    return float(s[0]), float(s[1])


def _sign(direction: Direction) -> float:
    return 1.0 if Direction(direction) is Direction.FORWARD else -1.0


def _raise_on_failure(status: int, t_reached: float, what: str) -> None:
    if status != kernels.STATUS_OK:
        raise IntegrationError(f"Step size underflow while computing {what}", t_reached)


def propagate(
    system: SystemSpec,
    s0: np.ndarray | list[float],
    t: float,
    direction: Direction = Direction.FORWARD,
    config: Optional[IntegratorConfig] = None,
) -> np.ndarray:
    """Plain flow over time ``t`` in the given direction."""
    state = _continuous_state(system, s0, "propagate")
    cfg = config or default_integrator()
    if t == 0:
        return state.copy()
    status, t_reached, y = kernels.integrate_to(
        kernels.MODE_STATE,
        system.kind.code,
        system.param_vector(),
        _sign(direction),
        state,
        float(t),
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_step,
        cfg.initial_step,
    )
    _raise_on_failure(status, t_reached, "the flow")
    return y


def propagate_ld(
    system: SystemSpec,
    s0: np.ndarray | list[float],
    tau: float,
    direction: Direction = Direction.FORWARD,
    config: Optional[IntegratorConfig] = None,
) -> tuple[np.ndarray, float]:
    """Final state and Lagrangian descriptor with integrand sum_i |f_i|^(1/2).

    The backward descriptor integrates the time-reversed field and accumulates the
    same nonnegative integrand.
    """
    state = _continuous_state(system, s0, "propagate_ld")
    if tau <= 0:
        raise ConfigurationError("The descriptor horizon must be positive")
    cfg = config or default_integrator()
    y0 = np.zeros(5)
    y0[:4] = state
    status, t_reached, y = kernels.integrate_to(
        kernels.MODE_LD,
        system.kind.code,
        system.param_vector(),
        _sign(direction),
        y0,
        float(tau),
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_step,
        cfg.initial_step,
    )
    _raise_on_failure(status, t_reached, "a Lagrangian descriptor")
    return y[:4].copy(), float(y[4])


def iterate_map_ld(
    system: SystemSpec,
    s0: np.ndarray | list[float],
    n: int,
    direction: Direction = Direction.FORWARD,
) -> tuple[np.ndarray, float]:
    """Discrete descriptor over ``n`` iterations, minimal-image torus displacements."""
    x, y = _map_state(system, s0, "iterate_map_ld")
    if n <= 0:
        raise ConfigurationError("The iteration count must be positive")
    backward = Direction(direction) is Direction.BACKWARD
    x_end, y_end, ld = kernels.iterate_ld(system.params["K"], x, y, int(n), backward)
    return np.array([x_end, y_end]), float(ld)


def forward_ld(
    system: SystemSpec,
    s0: np.ndarray | list[float],
    horizon: float,
    config: Optional[IntegratorConfig] = None,
) -> float:
    """Forward descriptor for either kind of system (iterations for the map)."""
    if system.is_map:
        return iterate_map_ld(system, s0, int(horizon))[1]
    return propagate_ld(system, s0, horizon, Direction.FORWARD, config)[1]


def total_ld(
    system: SystemSpec,
    s0: np.ndarray | list[float],
    horizon: float,
    config: Optional[IntegratorConfig] = None,
) -> tuple[float, float, float]:
    """(forward, backward, forward + backward) descriptors."""
    if system.is_map:
        forward = iterate_map_ld(system, s0, int(horizon), Direction.FORWARD)[1]
        backward = iterate_map_ld(system, s0, int(horizon), Direction.BACKWARD)[1]
    else:
        forward = propagate_ld(system, s0, horizon, Direction.FORWARD, config)[1]
        backward = propagate_ld(system, s0, horizon, Direction.BACKWARD, config)[1]
    return forward, backward, forward + backward


def _sample_capacity(horizon: float, ratio: float) -> int:
    """Upper bound on the number of geometric samples up to ``horizon``."""
    decades = math.log(max(horizon, _SALI_FIRST_SAMPLE) / _SALI_FIRST_SAMPLE) / math.log(ratio)
    return int(math.ceil(decades)) + 4


def _deviation_pair(
    dimension: int, w1: Optional[np.ndarray | list[float]], w2: Optional[np.ndarray | list[float]]
) -> tuple[np.ndarray, np.ndarray]:
    eye = np.eye(dimension)
    first = eye[0] if w1 is None else np.asarray(w1, dtype=np.float64)
    second = eye[1] if w2 is None else np.asarray(w2, dtype=np.float64)
    for w in (first, second):
        if w.shape != (dimension,) or not np.linalg.norm(w) > 0:
            raise ConfigurationError(
                f"Deviation vectors must be nonzero and of length {dimension}"
            )
    return first, second


def _resolve_sampling(
    sample_stride: Optional[float], floor: Optional[float]
) -> tuple[float, float]:
    settings = get_settings()
    ratio = settings.sali_sample_ratio if sample_stride is None else float(sample_stride)
    if ratio <= 1.0:
        raise ConfigurationError("The SALI sample stride must exceed 1")
    return ratio, settings.sali_floor if floor is None else float(floor)


def propagate_sali(
    system: SystemSpec,
    s0: np.ndarray | list[float],
    t_max: float,
    sample_stride: Optional[float] = None,
    config: Optional[IntegratorConfig] = None,
    w1: Optional[np.ndarray | list[float]] = None,
    w2: Optional[np.ndarray | list[float]] = None,
    floor: Optional[float] = None,
) -> SaliSeries:
    """SALI along a continuous orbit from the variational equations.

    Deviation vectors default to the canonical e1, e2, are renormalized after every
    accepted step, and SALI is sampled at t ~ stride^k. Integration stops early once
    SALI drops below ``floor``.
    """
    state = _continuous_state(system, s0, "propagate_sali")
    if t_max <= 0:
        raise ConfigurationError("t_max must be positive")
    cfg = config or default_integrator()
    ratio, floor_value = _resolve_sampling(sample_stride, floor)
    first, second = _deviation_pair(4, w1, w2)
    y0 = np.concatenate([state, first, second])
    capacity = _sample_capacity(t_max, ratio)
    times = np.empty(capacity)
    values = np.empty(capacity)
    status, t_reached, count, floor_hit, _ = kernels.integrate_sali(
        system.kind.code,
        system.param_vector(),
        y0,
        float(t_max),
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_step,
        cfg.initial_step,
        floor_value,
        ratio,
        _SALI_FIRST_SAMPLE,
        times,
        values,
    )
    _raise_on_failure(status, t_reached, "SALI")
    return SaliSeries(
        times=times[:count].tolist(), log10_sali=values[:count].tolist(), floor_hit=bool(floor_hit)
    )


def iterate_map_sali(
    system: SystemSpec,
    s0: np.ndarray | list[float],
    n: int,
    sample_stride: Optional[float] = None,
    w1: Optional[np.ndarray | list[float]] = None,
    w2: Optional[np.ndarray | list[float]] = None,
    floor: Optional[float] = None,
) -> SaliSeries:
    """SALI from the tangent map, sampled at iterations ~ stride^k."""
    x, y = _map_state(system, s0, "iterate_map_sali")
    if n <= 0:
        raise ConfigurationError("The iteration count must be positive")
    ratio, floor_value = _resolve_sampling(sample_stride, floor)
    first, second = _deviation_pair(2, w1, w2)
    w = np.vstack([first, second])
    capacity = _sample_capacity(float(n), ratio)
    times = np.empty(capacity)
    values = np.empty(capacity)
    count, floor_hit, _, _ = kernels.iterate_sali(
        system.params["K"], x, y, w, int(n), floor_value, ratio, times, values
    )
    return SaliSeries(
        times=times[:count].tolist(), log10_sali=values[:count].tolist(), floor_hit=bool(floor_hit)
    )


def sali(
    system: SystemSpec,
    s0: np.ndarray | list[float],
    horizon: float,
    config: Optional[IntegratorConfig] = None,
    sample_stride: Optional[float] = None,
) -> SaliSeries:
    """SALI series for either kind of system (iterations for the map)."""
    if system.is_map:
        return iterate_map_sali(system, s0, int(horizon), sample_stride)
    return propagate_sali(system, s0, horizon, sample_stride, config)


def section_crossings(
    system: SystemSpec,
    s0: np.ndarray | list[float],
    section: SectionSpec,
    n_crossings: int,
    t_max: float,
    config: Optional[IntegratorConfig] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Full states and times of up to ``n_crossings`` directed section crossings."""
    state = _continuous_state(system, s0, "poincare_section")
    cfg = config or default_integrator()
    points = np.empty((max(int(n_crossings), 0), 4))
    crossing_times = np.empty(points.shape[0])
    if points.shape[0] == 0:
        return points, crossing_times
    status, t_reached, count = kernels.integrate_section(
        system.kind.code,
        system.param_vector(),
        state,
        section.fixed_index,
        section.fixed_value,
        section_period(system),
        float(section.sign),
        float(t_max),
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_step,
        cfg.initial_step,
        points,
        crossing_times,
    )
    _raise_on_failure(status, t_reached, "section crossings")
    return points[:count], crossing_times[:count]


def poincare_section(
    system: SystemSpec,
    s0: np.ndarray | list[float],
    section: SectionSpec,
    n_crossings: int,
    t_max: float,
    config: Optional[IntegratorConfig] = None,
) -> np.ndarray:
    """Slice-plane points of the directed crossings (empty if none before ``t_max``)."""
    states, _ = section_crossings(system, s0, section, n_crossings, t_max, config)
    if states.shape[0] == 0:
        return np.empty((0, 2))
    points = np.array([slice_point_of(section, s) for s in states])
    period = section_period(system)
    if period > 0.0:
        # report the free angle in [-pi, pi)
        points[:, 0] = points[:, 0] - period * np.floor(points[:, 0] / period + 0.5)
    return points


def map_orbit(system: SystemSpec, s0: np.ndarray | list[float], n: int) -> np.ndarray:
    """``n`` successive iterates starting with ``s0``."""
    x, y = _map_state(system, s0, "map_orbit")
    out = np.empty((max(int(n), 0), 2))
    if out.shape[0]:
        kernels.map_orbit(system.params["K"], x, y, out.shape[0], out)
    return out
