"""Pseudospectral laboratory for the Chern-Simons-Schroedinger system in the Coulomb gauge."""

from .errors import (
    CheckpointFormatError,
    ConfigError,
    CostGuardError,
    CSSLabError,
    DomainValidityWarning,
    GridError,
    IntegrationError,
    ParameterError,
    PreconditionError,
)
from .evolution import SimulationState, integrate, nonlinearity, step
from .gauge import GaugeConfiguration, biot_savart, gauge_from_phi, make_coulomb_data, solve_a0
from .grid import SpectralGrid

__version__ = "0.1.0"

__all__ = [
    "CSSLabError",
    "CheckpointFormatError",
    "ConfigError",
    "CostGuardError",
    "DomainValidityWarning",
    "GaugeConfiguration",
    "GridError",
    "IntegrationError",
    "ParameterError",
    "PreconditionError",
    "SimulationState",
    "SpectralGrid",
    "biot_savart",
    "gauge_from_phi",
    "integrate",
    "make_coulomb_data",
    "nonlinearity",
    "solve_a0",
    "step",
]
