"""Treatment-effectiveness metrics computed from trajectories."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .dynamics.events import _crossings, locate_events
from .dynamics.model import EfficacySchedule, PatientParameters
from .dynamics.solver import SolverOptions, Trajectory, integrate

DETECTION_LIMIT = 100.0


class HorizonTooShortError(RuntimeError):
    """The viral load is still above the detection limit at the horizon."""


class MissingPeakError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    """Effectiveness metrics of one treated run against its untreated twin.

    Attributes
    ----------
    delta_v : float
        ``log10`` drop of the peak viral load.
    di : float
        Days spent above the detection limit.
    t_peak, v_max : float
        Treated time-to-peak and peak load.
    effective : bool
        Treated peak strictly earlier than the untreated one.
    """

    delta_v: float
    di: float
    t_peak: float
    v_max: float
    effective: bool
    t_peak_untreated: float
    v_max_untreated: float

    def as_dict(self) -> dict:
        return asdict(self)


def time_to_peak(traj: Trajectory):
    """Peak time of V; the treatment time itself when V turns down there."""
    return locate_events(traj).t_v_max


def _peak_load(traj: Trajectory):
    t = time_to_peak(traj)
    if t is None:
        return None, None
    return t, float(traj.V_at(t))


def delta_v(untreated: Trajectory, treated: Trajectory, log: bool = True) -> float:
    """Difference of the two peak loads (log10 units unless ``log=False``)."""
    _, vu = _peak_load(untreated)
    if vu is None:
        raise MissingPeakError("untreated trajectory has no viral peak")
    _, vt = _peak_load(treated)
    if vt is None:
        raise MissingPeakError("treated trajectory has no viral peak")
    if log:
        return math.log10(vu) - math.log10(vt)
    return vu - vt


def duration_of_infection(traj: Trajectory, detection_limit: float = DETECTION_LIMIT) -> float:
    """Total time with ``V > detection_limit``, summed over all intervals."""
    if traj.V_at(traj.horizon) > detection_limit:
        raise HorizonTooShortError(
            f"V is above {detection_limit} at the horizon t={traj.horizon}; use a longer horizon"
        )
    above = lambda t, r: traj.V_at(t, r) - detection_limit  # noqa: E731
    ups = _crossings(traj, above, 1)
    downs = _crossings(traj, above, -1)
    if traj.V_at(traj.t0) > detection_limit:
        ups = [traj.t0] + ups
    total = 0.0
    for a in ups:
        later = [d for d in downs if d > a]
        if later:
            total += later[0] - a
            downs = [d for d in downs if d > later[0]]
    return total


def metrics_report(
    params: PatientParameters,
    schedule: EfficacySchedule,
    detection_limit: float = DETECTION_LIMIT,
    horizon: float = 100.0,
    max_horizon: float | None = None,
    options: SolverOptions | None = None,
    untreated: Trajectory | None = None,
) -> MetricsReport:
    """Simulate untreated and treated runs and score the treatment.

    If the treated load is still above the limit at ``horizon`` the run is
    repeated with a doubled horizon, up to ``max_horizon``.  A precomputed
    ``untreated`` run may be passed to avoid re-integrating it.
    """
    max_horizon = max(horizon, max_horizon or horizon)
    if untreated is None:
        untreated = integrate(params, horizon=horizon, options=options)
    tu, vu = _peak_load(untreated)
    if tu is None:
        raise MissingPeakError("untreated trajectory has no viral peak")
    h = horizon
    while True:
        treated = integrate(params, schedule, horizon=h, options=options)
        try:
            di = duration_of_infection(treated, detection_limit)
            break
        except HorizonTooShortError:
            if h >= max_horizon:
                raise
            h = min(2 * h, max_horizon)
    tt, vt = _peak_load(treated)
    if tt is None:
        raise MissingPeakError("treated trajectory has no viral peak")
    return MetricsReport(
        delta_v=math.log10(vu) - math.log10(vt),
        di=di,
        t_peak=tt,
        v_max=vt,
        effective=bool(schedule.is_treated and tt < tu),
        t_peak_untreated=tu,
        v_max_untreated=vu,
    )


def duration_on_grid(traj: Trajectory, detection_limit: float = DETECTION_LIMIT, n: int = 200_001) -> float:
    """Grid-count approximation of the duration of infection, for cross-checks."""
    t = np.linspace(traj.t0, traj.horizon, n)
    return float(np.count_nonzero(traj.V_at(t) > detection_limit) * (t[1] - t[0]))
