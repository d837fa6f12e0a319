import pytest

from antiviral_dynamics.dynamics import integrate, locate_events
from antiviral_dynamics.workbench.registry import load_patient_table

PATIENTS = load_patient_table()


@pytest.fixture(scope="session")
def patients():
    return PATIENTS


@pytest.fixture(scope="session")
def untreated_runs():
    runs = {}
    for key, params in PATIENTS.items():
        traj = integrate(params, horizon=100.0)
        runs[key] = (traj, locate_events(traj))
    return runs
