"""Per-patient summaries built from the registry."""

from __future__ import annotations

from ..analysis import EarlyTreatmentSearch, critical_cells, early_treatment_time, u_infinity
from ..dynamics.events import locate_events
from ..dynamics.solver import SolverOptions, integrate
from .registry import load_patient_table

TABLE2_COLUMNS = ("patient", "U_c", "U_inf", "R0", "t_v_min", "t_i_max", "t_crit", "t_v_max", "v_max")


def characterise(params, horizon: float = 100.0, solver: SolverOptions | None = None) -> dict:
    """Untreated characterisation: thresholds, final size and event times."""
    traj = integrate(params, horizon=horizon, options=solver)
    ev = locate_events(traj)
    return {
        "U_c": critical_cells(params),
        "U_inf": u_infinity(params),
        "R0": params.R0,
        "t_v_min": ev.t_v_min,
        "t_i_max": ev.t_i_max,
        "t_crit": ev.t_crit,
        "t_v_max": ev.t_v_max,
        "v_max": float(traj.V_at(ev.t_v_max)) if ev.t_v_max is not None else None,
        "U_end": float(traj.U[-1]),
    }


def table2_rows(patients=None, horizon: float = 100.0, solver: SolverOptions | None = None) -> list:
    table = load_patient_table()
    keys = patients or sorted(table)
    rows = []
    for key in keys:
        row = {"patient": key}
        row.update(characterise(table[key], horizon, solver))
        rows.append(row)
    return rows


def early_treatment_rows(patients=None, eta_p=None, method: str = "simulation") -> list:
    table = load_patient_table()
    rows = []
    for key in patients or sorted(table):
        params = table[key]
        t_hat = locate_events(integrate(params)).t_v_max
        te = early_treatment_time(params, eta_p, EarlyTreatmentSearch(method=method))
        rows.append({
            "patient": key, "t_e": te, "t_v_max": t_hat,
            "ratio": te / t_hat if te is not None else None, "method": method,
        })
    return rows
