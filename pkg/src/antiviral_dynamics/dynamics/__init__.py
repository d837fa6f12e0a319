"""Model definition, integration and event location."""

from .events import ContractError, EventTimes, locate_events
from .model import (
    FULL,
    REDUCED,
    DomainError,
    EfficacySchedule,
    InfectionState,
    PatientParameters,
    rhs_full,
    rhs_reduced,
)
from .solver import IntegrationError, SolverOptions, Trajectory, integrate

__all__ = [
    "FULL", "REDUCED", "DomainError", "EfficacySchedule", "InfectionState", "PatientParameters",
    "rhs_full", "rhs_reduced", "IntegrationError", "SolverOptions", "Trajectory", "integrate",
    "ContractError", "EventTimes", "locate_events",
]
