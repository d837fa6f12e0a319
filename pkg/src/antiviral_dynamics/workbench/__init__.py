"""Patient registry, scenario runner, file formats and the CLI."""

from .io import export_results, load_viral_csv
from .registry import get_patient, load_patient_table
from .scenarios import ScenarioConfig, ScenarioResult, run_scenario

__all__ = [
    "export_results", "load_viral_csv", "get_patient", "load_patient_table",
    "ScenarioConfig", "ScenarioResult", "run_scenario",
]
