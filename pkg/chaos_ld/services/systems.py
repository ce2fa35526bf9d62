"""Equations of motion, potentials and energy-shell geometry of the model systems."""
import logging
import math
from collections.abc import Callable
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from chaos_ld.exceptions import (
    ConfigurationError,
    DegenerateEnergyError,
    InfeasibleStateError,
    UnsupportedOperationError,
)
from chaos_ld.schemas.system import SectionSpec, SystemKind, SystemSpec
from chaos_ld.services import kernels

logger = logging.getLogger(__name__)

# search domain of the free section coordinate
_SECTION_DOMAIN: dict[SystemKind, tuple[float, float]] = {
    SystemKind.DOUBLE_PENDULUM: (-math.pi, math.pi),
    SystemKind.FOUR_WELL: (-3.0, 3.0),
    # beyond y = 1 the section potential opens into the escape channel
    SystemKind.HENON_HEILES: (-2.0, 1.0),
}
_GRID_POINTS = 4001
_MAX_DOMAIN_DOUBLINGS = 6


def _require_continuous(system: SystemSpec, operation: str) -> None:
    if system.is_map:
        raise UnsupportedOperationError(f"{operation} is not defined for {system.kind.value}")


def _require_map(system: SystemSpec, operation: str) -> None:
    if not system.is_map:
        raise UnsupportedOperationError(f"{operation} is only defined for the standard map")


def _as_state(system: SystemSpec, state: np.ndarray | list[float]) -> np.ndarray:
    s = np.asarray(state, dtype=np.float64)
    if s.shape != (system.dimension,):
        raise ConfigurationError(
            f"{system.kind.value} states have length {system.dimension}, got shape {s.shape}"
        )
    return s


def vector_field(system: SystemSpec, state: np.ndarray | list[float]) -> np.ndarray:
    """Hamilton's equations (dq/dt, dp/dt)."""
    _require_continuous(system, "vector_field")
    s = _as_state(system, state)
    out = np.empty(4)
    kernels.rhs(system.kind.code, system.param_vector(), s, out)
    return out


def jacobian(system: SystemSpec, state: np.ndarray | list[float]) -> np.ndarray:
    """Analytic 4x4 Jacobian of the vector field."""
    _require_continuous(system, "jacobian")
    s = _as_state(system, state)
    out = np.empty((4, 4))
    kernels.jac(system.kind.code, system.param_vector(), s, out)
    return out


def map_step(system: SystemSpec, state: np.ndarray | list[float]) -> np.ndarray:
    """One standard-map iteration: momentum first, then position with the new momentum."""
    _require_map(system, "map_step")
    x, y = _as_state(system, state)
    return np.array(kernels.map_forward(system.params["K"], x, y))


def map_inverse(system: SystemSpec, state: np.ndarray | list[float]) -> np.ndarray:
    """Exact inverse of ``map_step``."""
    _require_map(system, "map_inverse")
    x, y = _as_state(system, state)
    return np.array(kernels.map_backward(system.params["K"], x, y))


def map_tangent(system: SystemSpec, state: np.ndarray | list[float]) -> np.ndarray:
    """Jacobian of ``map_step``; its determinant is 1."""
    _require_map(system, "map_tangent")
    x, _ = _as_state(system, state)
    kc = system.params["K"] * math.cos(2.0 * math.pi * x)
    return np.array([[1.0 + kc, 1.0], [kc, 1.0]])


def potential(system: SystemSpec, q: np.ndarray | list[float] | tuple[float, float]) -> float:
    """Potential energy at configuration ``q`` = (q1, q2)."""
    _require_continuous(system, "potential")
    q1, q2 = (float(v) for v in q)
    return float(_potential_array(system, np.float64(q1), np.float64(q2)))


def _potential_array(system: SystemSpec, q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    p = system.params
    if system.kind is SystemKind.HENON_HEILES:
        return 0.5 * (q1 * q1 + q2 * q2) + q1 * q1 * q2 - q2**3 / 3.0
    if system.kind is SystemKind.FOUR_WELL:
        return (
            q1**4
            - p["alpha"] * q1 * q1
            - p["delta"] * q1
            + q2**4
            - q2 * q2
            + p["beta"] * q1 * q1 * q2 * q2
        )
    return -p["alpha"] * (1.0 + p["sigma"]) * np.cos(q1) - np.cos(q2)


def inverse_mass_matrix(system: SystemSpec, q: np.ndarray | list[float]) -> np.ndarray:
    """M^-1(q); the identity for the separable systems."""
    _require_continuous(system, "inverse_mass_matrix")
    if system.kind is not SystemKind.DOUBLE_PENDULUM:
        return np.eye(2)
    alpha = system.params["alpha"]
    u = 1.0 + system.params["sigma"]
    c = math.cos(float(q[1]) - float(q[0]))
    det = u - c * c
    return np.array(
        [[1.0 / (alpha * alpha), -c / alpha], [-c / alpha, u]]
    ) / det


def kinetic_energy(system: SystemSpec, state: np.ndarray | list[float]) -> float:
    s = _as_state(system, state)
    p = s[2:]
    return float(0.5 * p @ inverse_mass_matrix(system, s[:2]) @ p)


def energy(system: SystemSpec, state: np.ndarray | list[float]) -> float:
    """Hamiltonian value: kinetic plus potential."""
    _require_continuous(system, "energy")
    s = _as_state(system, state)
    return kinetic_energy(system, s) + potential(system, s[:2])


def section_period(system: SystemSpec) -> float:
    """Period of the fixed section coordinate (0 when it is not an angle)."""
    return 2.0 * math.pi if system.kind is SystemKind.DOUBLE_PENDULUM else 0.0


def section_potential(
    system: SystemSpec, section: SectionSpec
) -> Callable[[np.ndarray], np.ndarray]:
    """Potential restricted to the section, as a function of the free coordinate."""
    _require_continuous(system, "section_potential")

    def restricted(free: np.ndarray) -> np.ndarray:
        free = np.asarray(free, dtype=np.float64)
        fixed = np.full_like(free, section.fixed_value)
        if section.fixed_index == 0:
            return _potential_array(system, fixed, free)
        return _potential_array(system, free, fixed)

    return restricted


def section_positions(section: SectionSpec, free: float) -> np.ndarray:
    q = np.empty(2)
    q[section.fixed_index] = section.fixed_value
    q[section.free_index] = free
    return q


def slice_point_of(section: SectionSpec, state: np.ndarray) -> tuple[float, float]:
    """Project a full state onto the slice coordinates."""
    i, j = section.slice_indices
    return float(state[i]), float(state[j])


def solve_constrained_momentum(
    system: SystemSpec,
    section: SectionSpec,
    slice_point: tuple[float, float] | np.ndarray,
    energy_level: float,
) -> np.ndarray:
    """Full state on the energy shell with the section's sign convention.

    Solves 1/2 p^T M^-1 p + V = E for the constrained momentum; with ``sign = +1`` the
    root with nonnegative crossing velocity of the fixed coordinate is taken.

    Raises:
        InfeasibleStateError: if the slice point lies outside the energy shell.
    """
    _require_continuous(system, "solve_constrained_momentum")
    free, p_free = float(slice_point[0]), float(slice_point[1])
    q = section_positions(section, free)
    a_inv = inverse_mass_matrix(system, q)
    f = section.fixed_index
    g = section.free_index
    # 1/2 a p^2 + b p + c = 0 in the constrained momentum p
    a = a_inv[f, f]
    b = a_inv[f, g] * p_free
    c = 0.5 * a_inv[g, g] * p_free * p_free + potential(system, q) - energy_level
    disc = b * b - 2.0 * a * c
    if disc < 0.0:
        raise InfeasibleStateError(
            f"Slice point ({free:.6g}, {p_free:.6g}) lies outside the energy shell "
            f"E={energy_level:.6g}"
        )
    root = section.sign * math.sqrt(disc)
    if b * root > 0.0:
        # -b + root cancels; use the product of the roots instead
        p_constrained = 2.0 * c / (-b - root)
    else:
        p_constrained = (-b + root) / a
    state = np.empty(4)
    state[:2] = q
    state[2 + g] = p_free
    state[2 + f] = p_constrained
    return state


def is_feasible(
    system: SystemSpec, section: SectionSpec, slice_point: tuple[float, float], energy_level: float
) -> bool:
    try:
        solve_constrained_momentum(system, section, slice_point, energy_level)
    except InfeasibleStateError:
        return False
    return True


def section_minimum(system: SystemSpec, section: SectionSpec) -> tuple[float, float]:
    """(location, value) of the global minimum of the section-restricted potential."""
    v = section_potential(system, section)
    lo, hi = _SECTION_DOMAIN[system.kind]
    grid = np.linspace(lo, hi, _GRID_POINTS)
    values = v(grid)
    i = int(np.argmin(values))
    left = grid[max(i - 1, 0)]
    right = grid[min(i + 1, grid.size - 1)]
    result = minimize_scalar(
        lambda x: float(v(np.array([x]))[0]),
        bounds=(left, right),
        method="bounded",
        options={"xatol": 1e-14},
    )
    x_min = float(result.x)
    v_min = float(v(np.array([x_min]))[0])
    if v_min > values[i]:
        x_min, v_min = float(grid[i]), float(values[i])
    return x_min, v_min


def _allowed_runs(allowed: np.ndarray) -> list[tuple[int, int]]:
    """Index ranges [start, stop] of consecutive True entries."""
    padded = np.concatenate(([False], allowed, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(s), int(e) - 1) for s, e in zip(edges[::2], edges[1::2])]


def slice_bounds(
    system: SystemSpec, section: SectionSpec, energy_level: float
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Bounding box of the allowed region of the slice at energy ``energy_level``.

    The position range covers every bounded component of {V_section <= E} (open
    components such as the Henon-Heiles escape channel are left out); the momentum
    range is +-sqrt(2 (E - V_min)).

    Raises:
        DegenerateEnergyError: if E lies below the section minimum, or the component
            around the minimum is unbounded (escape energies).
    """
    _require_continuous(system, "slice_bounds")
    v = section_potential(system, section)
    x_min, v_min = section_minimum(system, section)
    if energy_level < v_min:
        raise DegenerateEnergyError(
            f"Energy {energy_level:.6g} lies below the section minimum {v_min:.6g}"
        )
    p_max = math.sqrt(2.0 * (energy_level - v_min))
    lo, hi = _SECTION_DOMAIN[system.kind]
    if section_period(system) > 0.0:
        # the whole angle range; infeasible draws are rejected by the sampler
        return (lo, hi), (-p_max, p_max)

    for _ in range(_MAX_DOMAIN_DOUBLINGS):
        grid = np.linspace(lo, hi, _GRID_POINTS)
        values = v(grid)
        allowed = values <= energy_level
        centre = int(np.argmin(np.abs(grid - x_min)))
        allowed[centre] = True
        runs = _allowed_runs(allowed)
        home = next(r for r in runs if r[0] <= centre <= r[1])
        if home[0] > 0 and home[1] < grid.size - 1:
            break
        lo, hi = 2.0 * lo, 2.0 * hi
    else:
        raise DegenerateEnergyError(
            f"Allowed region at E={energy_level:.6g} is unbounded on the section"
        )
    bounded = [r for r in runs if r[0] > 0 and r[1] < grid.size - 1]

    def boundary(outside: int, inside: int) -> float:
        if values[inside] > energy_level:
            return float(grid[outside])
        return float(
            brentq(
                lambda x: float(v(np.array([x]))[0]) - energy_level,
                grid[min(outside, inside)],
                grid[max(outside, inside)],
                xtol=1e-14,
            )
        )

    first = min(r[0] for r in bounded)
    last = max(r[1] for r in bounded)
    q_lo = boundary(first - 1, first)
    q_hi = boundary(last + 1, last)
    logger.debug(
        "Slice bounds for %s at E=%.6g: q in [%.6g, %.6g], |p| <= %.6g",
        system.describe(),
        energy_level,
        q_lo,
        q_hi,
        p_max,
    )
    return (q_lo, q_hi), (-p_max, p_max)


def potential_minimum(system: SystemSpec) -> tuple[np.ndarray, float]:
    """Global minimum of the potential energy surface."""
    _require_continuous(system, "potential_minimum")
    if system.kind is SystemKind.HENON_HEILES:
        return np.zeros(2), 0.0
    if system.kind is SystemKind.DOUBLE_PENDULUM:
        return np.zeros(2), potential(system, (0.0, 0.0))
    best: Optional[tuple[np.ndarray, float]] = None
    for start in ((1.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (-1.0, 0.0), (0.5, -1.0), (-0.5, -1.0)):
        result = minimize(
            lambda q: potential(system, q), np.array(start), method="BFGS", tol=1e-14
        )
        if best is None or result.fun < best[1]:
            best = (np.asarray(result.x), float(result.fun))
    assert best is not None
    return best


def critical_energies(system: SystemSpec) -> dict[str, float]:
    """Energies of the potential minimum and the relevant saddles."""
    _require_continuous(system, "critical_energies")
    if system.kind is SystemKind.DOUBLE_PENDULUM:
        g = system.params["alpha"] * (1.0 + system.params["sigma"])
        return {
            "minimum": -g - 1.0,
            "saddle_upper_inverted": g - 1.0,
            "saddle_lower_inverted": 1.0 - g,
            "index2_saddle": g + 1.0,
        }
    if system.kind is SystemKind.HENON_HEILES:
        return {"minimum": 0.0, "saddle": 1.0 / 6.0}
    section = SectionSpec.default_for(system.kind)
    assert section is not None
    return {
        "minimum": potential_minimum(system)[1],
        "section_minimum": section_minimum(system, section)[1],
    }
