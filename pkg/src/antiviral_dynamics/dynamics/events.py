"""Characteristic event times of a trajectory.

Each event is bracketed by a sign change of a scalar function sampled on the
integrator's step grid (refined four times per step) and then polished by
bisection on the dense output.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import bisect

from .model import FULL, PatientParameters
from .solver import Trajectory, derivative

TIME_TOL = 1e-6
_SUBDIV = 4


class ContractError(ValueError):
    """Raised when a trajectory violates its structural contract."""


@dataclass(frozen=True)
class EventTimes:
    """Event times in days; ``None`` when the event does not occur.

    Attributes
    ----------
    t_v_min : early local minimum of V.
    t_i_max : peak of infected cells.
    t_crit : time U falls through the critical cell count.
    t_v_max : peak of V (global maximum among located local maxima).
    t_detect : first upward crossing of the detection limit.
    """

    t_v_min: float | None = None
    t_i_max: float | None = None
    t_crit: float | None = None
    t_v_max: float | None = None
    t_detect: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _segment_grids(traj: Trajectory):
    for k, seg in enumerate(traj.segments):
        t = seg.t
        if np.any(np.diff(t) <= 0):
            raise ContractError("trajectory times must be strictly increasing")
        frac = np.arange(_SUBDIV) / _SUBDIV
        fine = (t[:-1, None] + np.diff(t)[:, None] * frac).ravel()
        # the treated segment owns t_tr from the right, the first from the left
        yield k, np.append(fine, t[-1]), k > 0


def _crossings(traj: Trajectory, func, direction: int):
    """Roots of ``func(t, right)`` where the sign goes ``-`` to ``+`` (1), ``+`` to ``-`` (-1)."""
    roots = []
    for _, grid, right in _segment_grids(traj):
        values = func(grid, right)
        sign = np.sign(values)
        for i in np.flatnonzero(sign[:-1] * sign[1:] < 0):
            if direction and np.sign(sign[i + 1] - sign[i]) != direction:
                continue
            a, b = grid[i], grid[i + 1]
            if b - a <= TIME_TOL:
                roots.append(0.5 * (a + b))
                continue
            roots.append(bisect(lambda s: float(func(s, right)), a, b, xtol=TIME_TOL))
        # a zero landing exactly on a grid point
        for i in np.flatnonzero(sign[1:-1] == 0) + 1:
            if direction == 0 or np.sign(sign[i + 1] - sign[i - 1]) == 2 * direction:
                roots.append(float(grid[i]))
    return sorted(roots)


def _jump_at_treatment(traj: Trajectory, params: PatientParameters):
    """Left and right ``dV`` at treatment start, or None if no jump applies.

    The left derivative comes from the untreated field at the (continuous)
    state, so this also works for runs that begin at ``t_tr``.
    """
    sched = traj.schedule
    if not sched.is_treated or not (sched.t_tr > 0 and traj.t0 <= sched.t_tr < traj.horizon):
        return None
    x = traj.raw_at(sched.t_tr, right=True)
    left = derivative(params, traj.model_kind, x)[-1]
    right = derivative(params, traj.model_kind, x, sched.eta_beta, sched.eta_p)[-1]
    return float(left), float(right)


def viral_peak_candidates(traj: Trajectory, params: PatientParameters | None = None) -> list:
    """Local maxima of V: interior ``dV`` sign changes plus a treatment-time kink."""
    params = params or traj.params
    cands = _crossings(traj, lambda t, r: traj.dV_at(t, r), -1)
    jump = _jump_at_treatment(traj, params)
    if jump is not None and jump[0] > 0 >= jump[1]:
        cands.append(float(traj.schedule.t_tr))
    return sorted(c for c in cands if c < traj.horizon)


def _argmax(traj, times, values_at):
    if not times:
        return None
    vals = [float(values_at(t)) for t in times]
    return float(times[int(np.argmax(vals))])


def locate_events(
    traj: Trajectory,
    params: PatientParameters | None = None,
    schedule=None,
    detection_limit: float = 100.0,
) -> EventTimes:
    """Locate the characteristic times of ``traj``.

    Parameters
    ----------
    traj : Trajectory
    params, schedule :
        Accepted for symmetry with the rest of the API; both default to the
        values stored on the trajectory.
    detection_limit : float
        Threshold for ``t_detect`` in copies/mL.

    Notes
    -----
    For treated runs the critical level switches to the treated value at
    ``t_tr``; a drop across that jump counts as a crossing at ``t_tr``.
    """
    params = params or traj.params
    if schedule is not None and schedule != traj.schedule:
        raise ContractError("schedule does not match the trajectory")
    sched = traj.schedule

    def u_excess(t, right):
        eb, ep = traj._etas(t, right)
        uc = params.c * params.delta / (params.beta * params.p * (1 - eb) * (1 - ep))
        return traj.U_at(t, right) - uc

    crit = _crossings(traj, u_excess, -1)
    if sched.is_treated and traj.t0 < sched.t_tr < traj.horizon:
        if u_excess(sched.t_tr, False) > 0 >= u_excess(sched.t_tr, True):
            crit.append(float(sched.t_tr))
    t_crit = min(crit) if crit else None

    minima = _crossings(traj, lambda t, r: traj.dV_at(t, r), 1)
    if t_crit is not None:
        minima = [m for m in minima if m < t_crit]
    t_v_min = minima[0] if minima else None

    t_v_max = _argmax(traj, viral_peak_candidates(traj, params), traj.V_at)
    i_peaks = [t for t in _crossings(traj, lambda t, r: traj.dI_at(t, r), -1) if t < traj.horizon]
    t_i_max = _argmax(traj, i_peaks, traj.I_at)

    up = _crossings(traj, lambda t, r: traj.V_at(t, r) - detection_limit, 1)
    t_detect = up[0] if up else None

    return EventTimes(t_v_min, t_i_max, t_crit, t_v_max, t_detect)


__all__ = ["EventTimes", "ContractError", "locate_events", "viral_peak_candidates", "TIME_TOL", "FULL"]
