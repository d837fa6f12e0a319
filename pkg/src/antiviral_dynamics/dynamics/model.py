"""Target-cell-limited infection model with step antiviral efficacies.

State is ``(U, I, V)``: susceptible cells, infected cells and free virus
(copies/mL).  Antiviral inhibition acts on the infection rate ``beta`` and on
the replication rate ``p``; both switch on at a single treatment time.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a model quantity."""


FULL = "full"
REDUCED = "reduced"
MODEL_KINDS = (FULL, REDUCED)


@dataclass(frozen=True)
class PatientParameters:
    """Rates and initial condition for one patient.

    Attributes
    ----------
    beta : float
        Infection rate (mL / (copies day)).
    delta : float
        Death rate of infected cells (1/day).
    p : float
        Viral replication rate (copies / (cell mL day)).
    c : float
        Viral clearance rate (1/day).
    U0, I0, V0 : float
        Initial susceptible cells, infected cells and viral load.
    """

    beta: float
    delta: float
    p: float
    c: float
    U0: float = 4e8
    I0: float = 0.0
    V0: float = 0.31

    def __post_init__(self):
        for name in ("beta", "delta", "p", "c", "U0", "V0"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")
        if not (self.I0 >= 0 and math.isfinite(self.I0)):
            raise DomainError(f"I0 must be non-negative, got {self.I0!r}")

    @property
    def fast_clearance(self) -> bool:
        """True when ``c > delta``, the regime where the two-state reduction holds."""
        return self.c > self.delta

    @property
    def critical_cells(self) -> float:
        return self.c * self.delta / (self.beta * self.p)

    @property
    def R0(self) -> float:
        return self.U0 * self.beta * self.p / (self.c * self.delta)

    def with_initial(self, U0=None, I0=None, V0=None) -> "PatientParameters":
        kw = {k: v for k, v in (("U0", U0), ("I0", I0), ("V0", V0)) if v is not None}
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return {
            "beta": self.beta, "delta": self.delta, "p": self.p, "c": self.c,
            "U0": self.U0, "I0": self.I0, "V0": self.V0,
        }


def _check_eta(name: str, value: float) -> None:
    if not (0.0 <= value < 1.0):
        raise DomainError(f"{name} must lie in [0, 1), got {value!r}")


@dataclass(frozen=True)
class EfficacySchedule:
    """Step efficacies switching from 0 to ``eta_beta``/``eta_p`` at ``t_tr``.

    ``t_tr=None`` means no treatment at all.
    """

    t_tr: float | None = None
    eta_beta: float = 0.0
    eta_p: float = 0.0

    def __post_init__(self):
        _check_eta("eta_beta", self.eta_beta)
        _check_eta("eta_p", self.eta_p)
        if self.t_tr is not None and not (self.t_tr >= 0 and math.isfinite(self.t_tr)):
            raise DomainError(f"t_tr must be >= 0, got {self.t_tr!r}")

    @classmethod
    def untreated(cls) -> "EfficacySchedule":
        return cls()

    @property
    def is_treated(self) -> bool:
        return self.t_tr is not None and (self.eta_beta > 0 or self.eta_p > 0)

    def at(self, t: float) -> tuple[float, float]:
        """Return ``(eta_beta(t), eta_p(t))``; the jump is right-continuous."""
        if self.t_tr is None or t < self.t_tr:
            return 0.0, 0.0
        return self.eta_beta, self.eta_p


class InfectionState(NamedTuple):
    t: float
    U: float
    I: float
    V: float


def _check_state(U, I, V):
    if U < 0 or I < 0 or V < 0:
        raise DomainError(f"state must be non-negative, got U={U!r}, I={I!r}, V={V!r}")


def rhs_full(state, params: PatientParameters, eta_beta: float = 0.0, eta_p: float = 0.0):
    """Derivative ``(dU, dI, dV)`` of the three-state controlled system.

    ``state`` is an :class:`InfectionState` or any ``(U, I, V)`` triple.
    """
    U, I, V = state[-3:]
    _check_state(U, I, V)
    _check_eta("eta_beta", eta_beta)
    _check_eta("eta_p", eta_p)
    infection = params.beta * (1.0 - eta_beta) * U * V
    return (
        -infection,
        infection - params.delta * I,
        params.p * (1.0 - eta_p) * I - params.c * V,
    )


def rhs_reduced(state, params: PatientParameters, eta_beta: float = 0.0, eta_p: float = 0.0):
    """Derivative ``(dU, dV)`` of the two-state fast-manifold reduction.

    ``dV = (R - 1) * delta * V`` with ``R`` the current effective reproduction
    number; infected cells follow as ``I = (c/p) V``.
    """
    U, V = state[-2:]
    _check_state(U, 0.0, V)
    _check_eta("eta_beta", eta_beta)
    _check_eta("eta_p", eta_p)
    b = params.beta * (1.0 - eta_beta)
    gain = params.p * (1.0 - eta_p) * b / params.c
    return (-b * U * V, (gain * U - params.delta) * V)


def warn_if_slow_clearance(params: PatientParameters) -> None:
    if not params.fast_clearance:
        warnings.warn(
            f"c={params.c} <= delta={params.delta}: two-state reduction is not justified",
            stacklevel=3,
        )
