"""Parameter sets and energy ladders used by the reproduction campaigns."""
import numpy as np

from chaos_ld.schemas.system import SystemKind, SystemSpec
from chaos_ld.services.systems import critical_energies

HENON_HEILES_ENERGIES: tuple[float, ...] = (1 / 20, 1 / 15, 1 / 12, 1 / 10, 1 / 8)

STANDARD_MAP_K: tuple[float, ...] = (0.5, 0.971635, 1.5)

# (alpha, beta, delta)
FOUR_WELL_CASES: dict[int, tuple[float, float, float]] = {
    1: (0.75, 0.25, 0.5),
    2: (1.0, 0.25, 0.1),
    3: (1.0, 1.0, 0.1),
    4: (2.0, 0.1, 0.1),
    5: (0.5, 0.75, 0.0),
    6: (1.0, 2.0, 0.0),
    7: (0.01, 0.01, 0.0),
    8: (0.01, 0.01, 0.75),
}

# (alpha, sigma) of the desk-scale training campaign
DESK_TRAINING_CASES: tuple[tuple[float, float], ...] = (
    (1.0, 1.0),
    (2.0, 1.0),
    (1.0, 2.0),
    (0.5, 0.5),
)


def four_well_case(case: int) -> SystemSpec:
    alpha, beta, delta = FOUR_WELL_CASES[case]
    return SystemSpec.four_well(alpha, beta, delta)


def double_pendulum_lattice(exponents: range = range(-4, 5)) -> list[SystemSpec]:
    """alpha = 2^i, sigma = 2^j over the exponent grid."""
    return [
        SystemSpec.double_pendulum(alpha=2.0**i, sigma=2.0**j) for i in exponents for j in exponents
    ]


def double_pendulum_energies(system: SystemSpec, below: int = 40, above: int = 0) -> list[float]:
    """``below`` levels from the minimum (excluded) up to the index-2 saddle, then unit steps."""
    if system.kind is not SystemKind.DOUBLE_PENDULUM:
        raise ValueError("Energy ladder is defined for the double pendulum")
    levels = critical_energies(system)
    ladder = np.linspace(levels["minimum"], levels["index2_saddle"], below + 1)[1:]
    steps = levels["index2_saddle"] + np.arange(1, above + 1, dtype=np.float64)
    return [float(e) for e in np.concatenate([ladder, steps])]


def four_well_energies(system: SystemSpec, levels: int = 4, span: float = 1.0) -> list[float]:
    """``levels`` equally spaced energies above the section minimum (excluded), ``span`` wide."""
    if system.kind is not SystemKind.FOUR_WELL:
        raise ValueError("Energy ladder is defined for the four-well potential")
    floor = critical_energies(system)["section_minimum"]
    return [float(e) for e in np.linspace(floor, floor + span, levels + 1)[1:]]
