"""Built-in patient parameter sets and the reference characterisation."""

from __future__ import annotations

from ..dynamics.model import PatientParameters

CLEARANCE = 2.4
U0, I0, V0 = 4e8, 0.0, 0.31

# (beta, delta, p) per patient; c, U0, I0 and V0 are shared
_RATES = {
    "A": (1.35e-7, 0.61, 0.2),
    "B": (1.26e-7, 0.81, 0.2),
    "C": (5.24e-7, 0.51, 0.2),
    "D": (7.92e-10, 1.21, 361.6),
    "E": (1.51e-7, 2.01, 0.2),
    "F": (5.74e-10, 0.81, 382.0),
    "G": (1.23e-7, 0.91, 0.2),
    "H": (2.62e-9, 1.61, 278.2),
    "I": (3.08e-10, 2.01, 299.0),
}

# published characterisation of the untreated runs:
# U_c, U_inf, R0, t_v_min, t_i_max, t_crit, t_v_max, v_max
REFERENCE_TABLE = {
    "A": (0.54e8, 0.26e6, 7.35, 0.22, 10.53, 10.61, 10.95, 1.50e7),
    "B": (0.77e8, 0.23e7, 5.17, 0.24, 11.81, 11.90, 12.20, 1.18e7),
    "C": (0.12e8, 0.0, 34.22, 0.06, 3.94, 3.99, 4.42, 2.10e7),
    "D": (0.10e8, 0.0, 39.47, 0.02, 3.00, 3.05, 3.39, 2.90e10),
    "E": (1.60e8, 4.27e7, 2.50, 0.23, 14.31, 14.47, 14.69, 0.42e7),
    "F": (0.09e8, 0.0, 45.12, 0.03, 3.48, 3.53, 3.93, 3.55e10),
    "G": (0.90e8, 0.47e7, 4.50, 0.25, 12.44, 12.53, 12.83, 1.04e7),
    "H": (0.05e8, 0.0, 75.57, 0.00, 1.73, 1.77, 2.11, 2.02e10),
    "I": (0.52e8, 0.19e6, 7.64, 0.07, 6.77, 6.86, 7.09, 1.50e10),
}
REFERENCE_COLUMNS = ("U_c", "U_inf", "R0", "t_v_min", "t_i_max", "t_crit", "t_v_max", "v_max")


def load_patient_table() -> dict:
    """The nine built-in patients keyed ``"A"`` to ``"I"``."""
    return {
        key: PatientParameters(beta=b, delta=d, p=p, c=CLEARANCE, U0=U0, I0=I0, V0=V0)
        for key, (b, d, p) in _RATES.items()
    }


def get_patient(key: str) -> PatientParameters:
    table = load_patient_table()
    try:
        return table[key.upper()]
    except KeyError:
        raise KeyError(f"unknown patient {key!r}; expected one of {sorted(table)}") from None


def reference_row(key: str) -> dict:
    return dict(zip(REFERENCE_COLUMNS, REFERENCE_TABLE[key.upper()]))
