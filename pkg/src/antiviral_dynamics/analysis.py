"""Closed-form quantities of the target-cell-limited model.

Reproduction numbers, critical cell counts and efficacies, the Lambert-W
final size, the dead-cell fraction and the small-treatment-window peak
approximation.  Everything here is a pure function of its inputs except
:func:`early_treatment_time`, which drives the simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics.events import locate_events, viral_peak_candidates
from .dynamics.model import DomainError, EfficacySchedule, InfectionState, PatientParameters
from .dynamics.solver import SolverOptions, integrate

_INV_E = math.exp(-1.0)
_R_SLACK = 1e-12  # R within rounding of one counts as one


@dataclass(frozen=True)
class EfficacyPair:
    """Constant inhibitions of infection (``eta_beta``) and replication (``eta_p``)."""

    eta_beta: float = 0.0
    eta_p: float = 0.0

    def __post_init__(self):
        for name in ("eta_beta", "eta_p"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise DomainError(f"{name} must lie in [0, 1), got {v!r}")

    @property
    def gain(self) -> float:
        return (1.0 - self.eta_beta) * (1.0 - self.eta_p)


NO_TREATMENT = EfficacyPair()


@dataclass(frozen=True)
class ReproductionContext:
    R: float
    K: float
    U_at: float
    I_at: float
    V_at: float


@dataclass(frozen=True)
class PeakApproximation:
    """Closed-form peak after treatment.

    ``lemma_valid`` is False when ``beta V / delta`` lies outside the
    interval where the log-approximation was shown to hold (the ``f``
    condition of :func:`lemma_f`).
    """

    k1: float
    k2: float
    t_peak: float
    v_peak: float
    lemma_valid: bool


def reproduction_number(U: float, params: PatientParameters, eta: EfficacyPair = NO_TREATMENT) -> float:
    if U < 0:
        raise DomainError(f"U must be non-negative, got {U!r}")
    return U * params.beta * params.p * eta.gain / (params.c * params.delta)


def critical_cells(params: PatientParameters, eta: EfficacyPair = NO_TREATMENT) -> float:
    return params.c * params.delta / (params.beta * params.p * eta.gain)


def lambert_w0(x: float, max_iter: int = 50) -> float:
    """Principal branch of the Lambert W function on ``[-1/e, 0]``.

    Halley iteration seeded with the branch-point series for ``x < -0.25`` and
    with a short Taylor series near zero.
    """
    x = float(x)
    if not (-_INV_E - 1e-15 <= x <= 0.0) or math.isnan(x):
        raise DomainError(f"lambert_w0 is defined on [-1/e, 0], got {x!r}")
    if x == 0.0:
        return 0.0
    q = 2.0 * (math.e * x + 1.0)
    if q <= 0.0:
        return -1.0
    if x < -0.25:
        r = math.sqrt(q)
        w = -1.0 + r - r * r / 3.0 + 11.0 / 72.0 * r ** 3
    else:
        w = x * (1.0 - x * (1.0 - 1.5 * x))
    tol = 1e-13 * max(1.0, abs(x))
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol:
            break
        wp1 = w + 1.0
        if wp1 <= 0.0:
            return -1.0
        w_next = w - f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w = max(w_next, -1.0)
    return min(w, 0.0)


def _context(params, state, eta: EfficacyPair) -> ReproductionContext:
    _, U, I, V = state
    b = params.beta * (1.0 - eta.eta_beta)
    pe = params.p * (1.0 - eta.eta_p)
    R = reproduction_number(U, params, eta)
    # first integral of the controlled system: U + I + (delta/p')V - U_c ln U
    K = (b / params.c) * (pe * I / params.delta + V)
    return ReproductionContext(R, K, U, I, V)


def reproduction_context(params, state: InfectionState, eta: EfficacyPair = NO_TREATMENT) -> ReproductionContext:
    """``R`` and ``K`` at ``state`` under constant efficacies ``eta``."""
    return _context(params, state, eta)


def _w_of_final_size(R: float, K: float) -> float:
    arg = -R * math.exp(-(R + K))
    if arg < -_INV_E:
        # only reachable through rounding at R + K ~ 1
        if arg < -_INV_E * (1 + 1e-12):
            raise DomainError(f"final-size argument {arg!r} below -1/e")
        arg = -_INV_E
    return lambert_w0(arg)


def u_infinity(params: PatientParameters, state_at=None, eta: EfficacyPair = NO_TREATMENT) -> float:
    """Susceptible cells left once the infection has burnt out.

    Parameters
    ----------
    state_at : InfectionState or (t, U, I, V), optional
        State from which the constant efficacies apply; defaults to the
        patient's initial condition.
    """
    if state_at is None:
        state_at = InfectionState(0.0, params.U0, params.I0, params.V0)
    ctx = _context(params, state_at, eta)
    if ctx.R == 0.0:
        return ctx.U_at
    return -critical_cells(params, eta) * _w_of_final_size(ctx.R, ctx.K)


def dead_fraction_from(R: float, K: float) -> float:
    """Fraction of the susceptible pool at treatment that is eventually infected."""
    if not R > 0:
        raise DomainError(f"R must be positive, got {R!r}")
    D = 1.0 + _w_of_final_size(R, K) / R
    if -1e-10 < D < 0.0:
        D = 0.0
    return D


def dead_fraction(params: PatientParameters, state_at_tr, eta: EfficacyPair) -> float:
    ctx = _context(params, state_at_tr, eta)
    return dead_fraction_from(ctx.R, ctx.K)


def critical_efficacy(params: PatientParameters, U_at_tr: float) -> float:
    """Single-inhibitor efficacy that brings ``R(t_tr)`` to one (0 if already below)."""
    if U_at_tr <= params.critical_cells:
        return 0.0
    return 1.0 - params.critical_cells / U_at_tr


def effective_set_contains(params: PatientParameters, U_at_tr: float, pair: EfficacyPair) -> bool:
    """True when the pair drives the reproduction number below one."""
    return reproduction_number(U_at_tr, params, pair) < 1.0


def lemma_f(V: float, R: float, params: PatientParameters) -> float:
    """The ``f`` function bounding the log-approximation's validity window."""
    if not R > 1:
        raise DomainError(f"R must exceed 1, got {R!r}")
    x = params.beta * V / params.delta
    a = (1.0 - R) ** 2
    den = a + R * x
    return den * math.exp((-2.0 * a + 2.0 * x * (1.0 - R) - x * x) / den)


def _reduced_R(params, state, eta_p):
    return reproduction_number(state[1], params, EfficacyPair(0.0, eta_p))


def peak_viral_load_closed_form(params: PatientParameters, state_at_tr, eta_p: float) -> float:
    """Peak load from the reduced model's first integral.

    ``V + (p'/c) U - (delta/beta) ln U`` is conserved with ``p' = p(1-eta_p)``
    and the peak sits where ``U`` reaches the treated critical level.
    """
    t, U, _, V = state_at_tr
    R = _reduced_R(params, state_at_tr, eta_p)
    if R < 1 - _R_SLACK:
        raise DomainError(f"R(t_tr)={R:.4g} < 1: the peak is at t_tr")
    pe = params.p * (1.0 - eta_p)
    return V + pe / params.c * U - params.delta / params.beta * (math.log(R) + 1.0)


def peak_time_closed_form(params: PatientParameters, state_at_tr, eta_p: float) -> PeakApproximation:
    """Log-approximated peak time after a treatment started at ``state_at_tr.t``."""
    t, U, _, V = state_at_tr
    if not V > 0:
        raise DomainError("V(t_tr) must be positive")
    R = _reduced_R(params, state_at_tr, eta_p)
    if R < 1 - _R_SLACK:
        raise DomainError(f"R(t_tr)={R:.4g} < 1: the peak is at t_tr")
    b, d = params.beta, params.delta
    k1 = V / ((d / b) * (1.0 - R) ** 2 + R * V)
    if abs(R - 1.0) <= _R_SLACK:
        k1, k2, t_peak = 1.0, -1.0 / (b * V), float(t)
    else:
        k2 = 1.0 / (d * (1.0 - R) - b * V)
        t_peak = k2 * math.log(k1) + t
    valid = R > 1 and b * V / d < lemma_f(V, R, params)
    return PeakApproximation(k1, k2, t_peak, peak_viral_load_closed_form(params, state_at_tr, eta_p), valid)


# -- early treatment time ---------------------------------------------------

@dataclass(frozen=True)
class EarlyTreatmentSearch:
    """Controls for :func:`early_treatment_time`.

    ``method="simulation"`` compares simulated peak times;
    ``method="closed_form"`` uses :func:`peak_time_closed_form` for the
    treated peak.  ``eta_grid`` sets how many efficacies are tried per
    candidate time when maximising over efficacy.
    """

    method: str = "simulation"
    time_tol: float = 0.01
    eta_grid: int = 24
    margin: float = 0.05
    long_horizon: float = 400.0
    solver: SolverOptions = SolverOptions(rel_tol=1e-8)


def _untreated_reference(params, opts):
    traj = integrate(params, horizon=100.0, options=opts.solver)
    ev = locate_events(traj)
    if ev.t_v_max is None or ev.t_v_min is None:
        raise DomainError("untreated run has no early minimum and peak")
    return traj, ev


def treated_peak_after(params, base, t_ref: float, t_tr: float, pair: EfficacyPair,
                       opts: EarlyTreatmentSearch | None = None) -> bool:
    """Does treatment ``pair`` started at ``t_tr`` put the viral peak after ``t_ref``?

    ``base`` is the untreated trajectory supplying the state at ``t_tr``.  The
    treated run is integrated just past ``t_ref`` and only extended to
    ``opts.long_horizon`` when that is not conclusive (load still rising but
    below an earlier local maximum, or falling while ``R`` is still above one).
    """
    opts = opts or EarlyTreatmentSearch()
    state = base.state_at(t_tr)
    if opts.method == "closed_form":
        if pair.eta_beta > 0:
            raise DomainError("the closed-form peak covers replication inhibition only")
        if _reduced_R(params, state, pair.eta_p) <= 1:
            return False
        return peak_time_closed_form(params, state, pair.eta_p).t_peak > t_ref
    sched = EfficacySchedule(t_tr, pair.eta_beta, pair.eta_p)
    init = base.raw_at(t_tr) if opts.solver.model_kind == "full" else (state.U, 0.0, state.V)
    uc_tr = critical_cells(params, pair)
    for horizon in (max(t_ref, t_tr) + opts.margin, opts.long_horizon):
        traj = integrate(params, sched, horizon=horizon, options=opts.solver, t_start=t_tr, initial=init)
        peaks = viral_peak_candidates(traj, params)
        v_best = max((float(traj.V_at(s)) for s in peaks), default=0.0)
        rising = traj.dV_at(traj.horizon) > 0
        if rising and float(traj.V_at(traj.horizon)) >= v_best:
            return True
        if not rising and float(traj.U_at(traj.horizon)) <= uc_tr:
            break
    if not peaks:
        return False
    return max(peaks, key=lambda s: float(traj.V_at(s))) > t_ref


def _delays_peak(params, base, t_peak, t_tr, eta_p, opts) -> bool:
    return treated_peak_after(params, base, t_peak, t_tr, EfficacyPair(0.0, eta_p), opts)


def _eta_candidates(params, U, n):
    """Efficacies spanning ``R(t_tr) - 1`` log-uniformly over ``(1e-6, R - 1)``."""
    R = reproduction_number(U, params)
    if R <= 1:
        return []
    hi = math.log10(R - 1.0)
    lo = min(-6.0, hi - 1.0)
    targets = 1.0 + np.logspace(hi, lo, n)[1:]
    return [1.0 - r / R for r in targets]


def early_treatment_time(
    params: PatientParameters,
    eta_p: float | None = None,
    search_opts: EarlyTreatmentSearch | None = None,
):
    """Latest treatment start that still pushes the viral peak later.

    Parameters
    ----------
    eta_p : float or None
        Fixed replication inhibition.  ``None`` maximises over every
        sub-critical efficacy, giving the outer edge of the window.

    Returns
    -------
    float or None
        ``t^e`` in days, or None when no start time in ``(t_v_min, t_v_max)``
        delays the peak.
    """
    opts = search_opts or EarlyTreatmentSearch()
    base, ev = _untreated_reference(params, opts)
    t_hat = ev.t_v_max

    def delays(t_tr):
        if eta_p is not None:
            return eta_p > 0 and _delays_peak(params, base, t_hat, t_tr, eta_p, opts)
        U = float(base.U_at(t_tr))
        return any(_delays_peak(params, base, t_hat, t_tr, e, opts) for e in _eta_candidates(params, U, opts.eta_grid))

    lo = ev.t_v_min + opts.time_tol
    hi = t_hat
    if not delays(lo):
        return None
    while hi - lo > opts.time_tol:
        mid = 0.5 * (lo + hi)
        if delays(mid):
            lo = mid
        else:
            hi = mid
    return lo
