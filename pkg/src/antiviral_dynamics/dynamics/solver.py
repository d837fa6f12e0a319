"""Adaptive Dormand-Prince 5(4) integration with dense output.

The efficacy step at ``t_tr`` is handled by integrating two separate segments,
so no step ever straddles the discontinuity.  Each accepted step keeps the
five continuous-extension coefficients of the classic DOPRI5 dense output, so
the trajectory can be evaluated at any time to fourth order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    FULL,
    MODEL_KINDS,
    REDUCED,
    DomainError,
    EfficacySchedule,
    InfectionState,
    PatientParameters,
)

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)
# dense output (Hairer & Wanner, contd5)
D1, D3, D4, D5, D6, D7 = (
    -12715105075 / 11282082432,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)

# PI controller (beta=0.04 as in DOPRI5)
_SAFE = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_FAC_MIN, _FAC_MAX = 0.2, 10.0


class IntegrationError(RuntimeError):
    """Step size underflow or persistent negativity; carries the last good state."""

    def __init__(self, message, t, y):
        super().__init__(f"{message} at t={t!r}")
        self.t = t
        self.y = tuple(y)


@dataclass(frozen=True)
class SolverOptions:
    """Integration controls.

    ``abs_tol`` is relative to each component's initial magnitude (components
    starting at zero use the largest initial magnitude).  ``early_max_step``
    caps the step on ``[0, early_window)`` so the early viral dip is sampled
    finely.
    """

    model_kind: str = FULL
    rel_tol: float = 1e-9
    abs_tol: float = 1e-30
    max_step: float = 0.5
    early_max_step: float = 0.01
    early_window: float = 1.0
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise DomainError(f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_step > 0):
            raise DomainError("tolerances and max_step must be positive")


@dataclass
class _Segment:
    t: np.ndarray  # step start times, plus final end time
    y: np.ndarray  # (nsteps+1, n) states at step boundaries
    rcont: np.ndarray  # (nsteps, 5, n) dense coefficients
    eta_beta: float
    eta_p: float


def _dopri(f, t0, y0, t1, rtol, atol, max_step, early, max_steps):
    """Integrate ``y' = f(y)`` on ``[t0, t1]``; return a dense segment."""
    n = len(y0)
    y = list(y0)
    t = t0
    k1 = f(y)
    h = min(max_step, 1e-3, t1 - t0)
    facold = 1e-4
    ts, ys, rc = [t], [tuple(y)], []
    early_max, early_end = early
    nsteps = 0
    reject = False
    while t < t1:
        if nsteps >= max_steps:
            raise IntegrationError("maximum number of steps exceeded", t, y)
        hmax = early_max if t < early_end else max_step
        h = min(h, hmax)
        if t + 1.01 * h >= t1:
            h = t1 - t
        if h < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError("step size underflow", t, y)

        y2 = [yi + h * A21 * a for yi, a in zip(y, k1)]
        k2 = f(y2)
        y3 = [yi + h * (A31 * a + A32 * b) for yi, a, b in zip(y, k1, k2)]
        k3 = f(y3)
        y4 = [yi + h * (A41 * a + A42 * b + A43 * c) for yi, a, b, c in zip(y, k1, k2, k3)]
        k4 = f(y4)
        y5 = [
            yi + h * (A51 * a + A52 * b + A53 * c + A54 * d)
            for yi, a, b, c, d in zip(y, k1, k2, k3, k4)
        ]
        k5 = f(y5)
        y6 = [
            yi + h * (A61 * a + A62 * b + A63 * c + A64 * d + A65 * e)
            for yi, a, b, c, d, e in zip(y, k1, k2, k3, k4, k5)
        ]
        k6 = f(y6)
        ynew = [
            yi + h * (A71 * a + A73 * c + A74 * d + A75 * e + A76 * g)
            for yi, a, c, d, e, g in zip(y, k1, k3, k4, k5, k6)
        ]

        # a step that leaves the positive orthant is rejected outright
        if any(v < -tol for v, tol in zip(ynew, atol)):
            h *= 0.5
            reject = True
            continue
        ynew = [v if v >= 0.0 else 0.0 for v in ynew]
        k7 = f(ynew)

        err = 0.0
        for i in range(n):
            sk = atol[i] + rtol * max(abs(y[i]), abs(ynew[i]))
            ei = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            err += (ei / sk) ** 2
        err = math.sqrt(err / n)

        fac11 = err ** _EXPO if err > 0 else 0.0
        fac = fac11 / facold ** _BETA
        fac = min(1 / _FAC_MIN, max(1 / _FAC_MAX, fac / _SAFE))
        hnew = h / fac if fac > 0 else h * _FAC_MAX
        nsteps += 1

        if err <= 1.0:
            facold = max(err, 1e-4)
            coeffs = []
            for i in range(n):
                ydiff = ynew[i] - y[i]
                bspl = h * k1[i] - ydiff
                coeffs.append((
                    y[i],
                    ydiff,
                    bspl,
                    ydiff - h * k7[i] - bspl,
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]),
                ))
            rc.append(coeffs)
            t = t1 if h == t1 - t else t + h
            y = ynew
            k1 = k7
            ts.append(t)
            ys.append(tuple(y))
            if reject:
                hnew = min(hnew, h)
            reject = False
            h = hnew
        else:
            h = h / min(1 / _FAC_MIN, fac11 / _SAFE)
            reject = True

    rcont = np.array(rc, dtype=float).transpose(0, 2, 1) if rc else np.empty((0, 5, n))
    return np.array(ts), np.array(ys, dtype=float), rcont


def _system(params: PatientParameters, kind: str, eta_beta: float, eta_p: float):
    b = params.beta * (1.0 - eta_beta)
    d = params.delta
    pe = params.p * (1.0 - eta_p)
    c = params.c
    if kind == FULL:
        def f(y):
            inf = b * y[0] * y[2]
            return (-inf, inf - d * y[1], pe * y[1] - c * y[2])
    else:
        gain = pe * b / c

        def f(y):
            return (-b * y[0] * y[1], (gain * y[0] - d) * y[1])
    return f


@dataclass(frozen=True)
class Trajectory:
    """Integrated trajectory with dense output.

    Samples live at accepted step boundaries; ``state_at`` evaluates the
    continuous extension anywhere in ``[0, horizon]``.  For the reduced model
    infected cells are reconstructed on the fast manifold
    ``I = c V / (p (1 - eta_p))``.
    """

    params: PatientParameters
    schedule: EfficacySchedule
    model_kind: str
    segments: tuple = field(repr=False)

    @property
    def t0(self) -> float:
        return float(self.segments[0].t[0])

    @property
    def horizon(self) -> float:
        return float(self.segments[-1].t[-1])

    @property
    def t_tr(self):
        """Treatment start if it falls inside the integrated span, else None."""
        if len(self.segments) > 1:
            return float(self.segments[1].t[0])
        return None

    @property
    def t(self) -> np.ndarray:
        return np.concatenate([self.segments[0].t] + [s.t[1:] for s in self.segments[1:]])

    def _stacked(self, col: int) -> np.ndarray:
        return np.concatenate([self.segments[0].y[:, col]] + [s.y[1:, col] for s in self.segments[1:]])

    @property
    def U(self) -> np.ndarray:
        return self._stacked(0)

    @property
    def V(self) -> np.ndarray:
        return self._stacked(2 if self.model_kind == FULL else 1)

    @property
    def I(self) -> np.ndarray:
        if self.model_kind == FULL:
            return self._stacked(1)
        parts = []
        for k, s in enumerate(self.segments):
            v = s.y[:, 1] if k == 0 else s.y[1:, 1]
            parts.append(v * self.params.c / (self.params.p * (1.0 - s.eta_p)))
        return np.concatenate(parts)

    @property
    def samples(self) -> list:
        return [InfectionState(*row) for row in zip(self.t, self.U, self.I, self.V)]

    def _segment_index(self, t: float, right: bool = True) -> int:
        # at t_tr the treated (right) segment is used unless right=False
        if len(self.segments) == 1:
            return 0
        t_tr = self.segments[1].t[0]
        if t > t_tr or (t == t_tr and right):
            return 1
        return 0

    def _eval(self, seg: _Segment, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(seg.t, t, side="right") - 1, 0, len(seg.rcont) - 1)
        t0 = seg.t[idx]
        h = seg.t[idx + 1] - t0
        s = ((t - t0) / h)[..., None]
        s1 = 1.0 - s
        r = seg.rcont[idx]
        return r[..., 0, :] + s * (r[..., 1, :] + s1 * (r[..., 2, :] + s * (r[..., 3, :] + s1 * r[..., 4, :])))

    def raw_at(self, t, right: bool = True) -> np.ndarray:
        """Integrator state (``(U, I, V)`` or ``(U, V)``) at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        lo, hi = self.t0, self.horizon
        if np.any(t < lo - 1e-12) or np.any(t > hi + 1e-12):
            raise DomainError(f"time outside trajectory span [{lo}, {hi}]")
        t = np.clip(t, lo, hi)
        if len(self.segments) == 1:
            out = self._eval(self.segments[0], t)
        else:
            t_tr = self.segments[1].t[0]
            pick = (t > t_tr) | ((t == t_tr) & right)
            out = np.where(pick[..., None], self._eval(self.segments[1], t), self._eval(self.segments[0], t))
        return np.maximum(out, 0.0)

    def V_at(self, t, right: bool = True):
        col = 2 if self.model_kind == FULL else 1
        return self.raw_at(t, right)[..., col]

    def U_at(self, t, right: bool = True):
        return self.raw_at(t, right)[..., 0]

    def _etas(self, t, right: bool = True):
        t = np.asarray(t, dtype=float)
        first = self.segments[0]
        eb = np.full(t.shape, first.eta_beta)
        ep = np.full(t.shape, first.eta_p)
        if len(self.segments) > 1:
            seg = self.segments[1]
            on = (t > seg.t[0]) | ((t == seg.t[0]) & right)
            eb = np.where(on, seg.eta_beta, eb)
            ep = np.where(on, seg.eta_p, ep)
        return eb, ep

    def I_at(self, t, right: bool = True):
        x = self.raw_at(t, right)
        if self.model_kind == FULL:
            return x[..., 1]
        _, ep = self._etas(t, right)
        return x[..., 1] * self.params.c / (self.params.p * (1.0 - ep))

    def state_at(self, t: float, right: bool = True) -> InfectionState:
        return InfectionState(
            float(t), float(self.U_at(t, right)), float(self.I_at(t, right)), float(self.V_at(t, right))
        )

    def derivative_at(self, t, right: bool = True) -> np.ndarray:
        """Model right-hand side along the dense output; columns follow the state."""
        x = self.raw_at(t, right)
        eb, ep = self._etas(t, right)
        return derivative(self.params, self.model_kind, x, eb, ep)

    def dV_at(self, t, right: bool = True):
        return self.derivative_at(t, right)[..., -1]

    def dI_at(self, t, right: bool = True):
        d = self.derivative_at(t, right)
        if self.model_kind == FULL:
            return d[..., 1]
        _, ep = self._etas(t, right)
        return d[..., 1] * self.params.c / (self.params.p * (1.0 - ep))

    def resample(self, n: int = 2000) -> dict:
        """Time-uniform resampling for export (at most ``n`` points)."""
        tt = np.linspace(self.t0, self.horizon, max(2, min(n, 10 * len(self.t))))
        return {"t": tt, "U": self.U_at(tt), "I": self.I_at(tt), "V": self.V_at(tt)}


def derivative(params: PatientParameters, kind: str, x, eta_beta=0.0, eta_p=0.0) -> np.ndarray:
    """Vectorised right-hand side; ``x[..., :]`` holds the integrator state."""
    x = np.asarray(x, dtype=float)
    b = params.beta * (1.0 - np.asarray(eta_beta))
    pe = params.p * (1.0 - np.asarray(eta_p))
    if kind == FULL:
        U, I, V = x[..., 0], x[..., 1], x[..., 2]
        inf = b * U * V
        return np.stack([-inf, inf - params.delta * I, pe * I - params.c * V], axis=-1)
    U, V = x[..., 0], x[..., 1]
    return np.stack([-b * U * V, (pe * b / params.c * U - params.delta) * V], axis=-1)


def _abs_tol_vector(y0, abs_tol):
    scale = max(abs(v) for v in y0)
    return [abs_tol * (abs(v) if v != 0 else scale) for v in y0]


def integrate(
    params: PatientParameters,
    schedule: EfficacySchedule | None = None,
    horizon: float = 100.0,
    options: SolverOptions | None = None,
    *,
    t_start: float = 0.0,
    initial=None,
) -> Trajectory:
    """Integrate the controlled model from ``t_start`` to ``horizon``.

    Parameters
    ----------
    params : PatientParameters
    schedule : EfficacySchedule, optional
        Defaults to no treatment.
    horizon : float
        Final time in days post infection.
    options : SolverOptions, optional
    t_start, initial :
        Start from an arbitrary time and state (``(U, I, V)``; for the
        reduced model ``I`` is ignored).  Defaults to the patient's initial
        condition at ``t=0``.
    """
    schedule = schedule or EfficacySchedule()
    opts = options or SolverOptions()
    if not horizon > t_start:
        raise DomainError(f"horizon must exceed start time, got {horizon!r}")
    if initial is None:
        initial = (params.U0, params.I0, params.V0)
    U, I, V = (float(v) for v in initial)
    if U < 0 or I < 0 or V < 0:
        raise DomainError("initial state must be non-negative")
    y0 = (U, I, V) if opts.model_kind == FULL else (U, V)
    atol = _abs_tol_vector(y0, opts.abs_tol)
    early = (opts.early_max_step, opts.early_window)

    bounds = [t_start]
    if schedule.t_tr is not None and t_start < schedule.t_tr < horizon:
        bounds.append(schedule.t_tr)
    bounds.append(horizon)

    segments = []
    y = y0
    for a, b in zip(bounds[:-1], bounds[1:]):
        eb, ep = schedule.at(a)
        f = _system(params, opts.model_kind, eb, ep)
        ts, ys, rcont = _dopri(f, a, y, b, opts.rel_tol, atol, opts.max_step, early, opts.max_steps)
        segments.append(_Segment(ts, ys, rcont, eb, ep))
        y = tuple(ys[-1])
    return Trajectory(params, schedule, opts.model_kind, tuple(segments))
