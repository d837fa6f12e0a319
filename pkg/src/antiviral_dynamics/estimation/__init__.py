"""Parameter estimation from viral-load data."""

from .cost import ViralObservation, rmsle
from .de import DEConfig, DEResult, differential_evolution
from .fit import FitConfig, FitResult, ProfileInterval, fit_patient, predict, profile_ci, synthetic_observations

__all__ = [
    "ViralObservation", "rmsle", "DEConfig", "DEResult", "differential_evolution",
    "FitConfig", "FitResult", "ProfileInterval", "fit_patient", "predict", "profile_ci",
    "synthetic_observations",
]
