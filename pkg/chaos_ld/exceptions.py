"""Exception hierarchy.

Each class carries the exit code the command line maps it to:
2 for configuration/validation problems, 3 for data problems, 4 for I/O.
"""


class ChaosLDError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class ConfigurationError(ChaosLDError):
    """Invalid parameters or configuration."""

    exit_code = 2


class UnsupportedOperationError(ConfigurationError):
    """Operation not defined for this kind of system (e.g. a vector field for a map)."""


class RecipeMismatchError(ConfigurationError):
    """Model and dataset/features disagree on the feature recipe."""


class InfeasibleStateError(ChaosLDError):
    """Slice point lies outside the energy shell."""


class StencilInfeasibleError(InfeasibleStateError):
    """At least one neighbor of a stencil lies outside the energy shell."""


class DegenerateCenterError(ChaosLDError):
    """The central descriptor is zero, so D and R are undefined."""


class IntegrationError(ChaosLDError):
    """Step size underflow during integration."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (t reached: {t_reached:.6g})")
        self.t_reached = t_reached


class InsufficientDataError(ChaosLDError):
    """Too few usable samples for a fit."""


class DegenerateEnergyError(ChaosLDError):
    """Sampling acceptance rate too low at the requested energy."""


class NoThresholdError(ChaosLDError):
    """Histogram is unimodal; no valley to threshold at."""


class UntrainableError(ChaosLDError):
    """Training set is empty or contains a single class."""


class ModelFormatError(ChaosLDError):
    """Malformed or incompatible model document."""


class DatasetFormatError(ChaosLDError):
    """Dataset file does not follow the column contract."""

    exit_code = 4
