"""Scenario orchestration: resolve treatment times, run grids, score runs."""

from __future__ import annotations

import hashlib
import itertools
import json
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

from .. import __version__
from ..analysis import (
    EarlyTreatmentSearch,
    EfficacyPair,
    critical_efficacy,
    early_treatment_time,
    effective_set_contains,
    treated_peak_after,
)
from ..dynamics.events import EventTimes, locate_events
from ..dynamics.model import MODEL_KINDS, EfficacySchedule, PatientParameters
from ..dynamics.solver import SolverOptions, integrate
from ..metrics import MetricsReport, metrics_report
from .registry import get_patient

OUTPUTS = ("metrics", "events", "trajectory", "thresholds", "effectiveness")
_SYMBOL = re.compile(r"^\s*(?:([0-9]*\.?[0-9]+(?:[eE][-+]?\d+)?)\s*\*\s*)?(t_DL|t_V|t_e)\s*$")


class ScenarioError(ValueError):
    pass


def _increasing(name, values):
    if not values:
        raise ScenarioError(f"{name} grid must not be empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ScenarioError(f"{name} grid must be strictly increasing")


@dataclass(frozen=True)
class ScenarioConfig:
    """One scenario or a sweep grid for one patient.

    ``t_tr`` entries are days, ``None`` (no treatment) or symbols ``t_DL``,
    ``t_V``, ``t_e``, optionally scaled as ``"0.7*t_e"``.  The efficacy axes
    are combined as a Cartesian product with the treatment times.
    ``outputs`` selects what each run computes; ``"effectiveness"`` alone
    takes a fast path that only decides whether the peak moves earlier.
    """

    patient: str | PatientParameters
    horizon: float
    t_tr: tuple = (None,)
    eta_beta: tuple = (0.0,)
    eta_p: tuple = (0.0,)
    detection_limit: float = 100.0
    max_horizon: float | None = None
    model_kind: str = "full"
    outputs: tuple = ("metrics", "events")
    seed: int = 0
    workers: int = 1
    rel_tol: float = 1e-8
    trajectory_points: int = 2000

    def __post_init__(self):
        for name in ("t_tr", "eta_beta", "eta_p", "outputs"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.horizon > 0:
            raise ScenarioError("horizon must be positive")
        if self.model_kind not in MODEL_KINDS:
            raise ScenarioError(f"model_kind must be one of {MODEL_KINDS}")
        unknown = set(self.outputs) - set(OUTPUTS)
        if unknown:
            raise ScenarioError(f"unknown outputs {sorted(unknown)}; choose from {OUTPUTS}")
        _increasing("eta_beta", list(self.eta_beta))
        _increasing("eta_p", list(self.eta_p))
        if not self.t_tr:
            raise ScenarioError("t_tr grid must not be empty")
        numeric = [t for t in self.t_tr if isinstance(t, (int, float))]
        _increasing("t_tr", numeric) if numeric else None
        if len(set(map(str, self.t_tr))) != len(self.t_tr):
            raise ScenarioError("t_tr grid has duplicate entries")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        for key in ("patient", "horizon"):
            if key not in data:
                raise ScenarioError(f"config is missing required key {key!r}")
        if isinstance(data["patient"], dict):
            data["patient"] = PatientParameters(**data["patient"])
        for key in ("t_tr", "eta_beta", "eta_p", "outputs"):
            if key in data and not isinstance(data[key], (list, tuple)):
                data[key] = [data[key]]
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ScenarioError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    def as_dict(self) -> dict:
        d = asdict(self)
        if isinstance(self.patient, PatientParameters):
            d["patient"] = self.patient.as_dict()
        return d

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def params(self) -> PatientParameters:
        if isinstance(self.patient, PatientParameters):
            return self.patient
        return get_patient(self.patient)

    @property
    def label(self) -> str:
        return self.patient if isinstance(self.patient, str) else "custom"

    @property
    def solver(self) -> SolverOptions:
        return SolverOptions(model_kind=self.model_kind, rel_tol=self.rel_tol)


@dataclass
class ScenarioResult:
    patient: str
    t_tr_spec: object
    t_tr: float | None
    eta_beta: float
    eta_p: float
    effective: bool | None = None
    metrics: MetricsReport | None = None
    events: EventTimes | None = None
    thresholds: dict | None = None
    trajectory: dict | None = None
    error: str | None = None
    provenance: dict = field(default_factory=dict)

    def row(self) -> dict:
        m = self.metrics
        out = {
            "patient": self.patient,
            "t_tr": self.t_tr,
            "eta_beta": self.eta_beta,
            "eta_p": self.eta_p,
            "t_peak": m.t_peak if m else None,
            "v_max": m.v_max if m else None,
            "delta_v_log10": m.delta_v if m else None,
            "di": m.di if m else None,
            "effective": self.effective,
        }
        if self.events is not None:
            out["events"] = self.events.as_dict()
        if self.thresholds is not None:
            out["thresholds"] = self.thresholds
        if self.trajectory is not None:
            out["trajectory"] = {k: list(map(float, v)) for k, v in self.trajectory.items()}
        if self.error is not None:
            out["error"] = self.error
        out["t_tr_spec"] = self.t_tr_spec if not isinstance(self.t_tr_spec, float) else None
        return out


@lru_cache(maxsize=64)
def _untreated(params: PatientParameters, horizon: float, solver: SolverOptions, detection_limit: float):
    traj = integrate(params, horizon=horizon, options=solver)
    return traj, locate_events(traj, detection_limit=detection_limit)


@lru_cache(maxsize=64)
def _early_time(params: PatientParameters, solver: SolverOptions):
    return early_treatment_time(params, None, EarlyTreatmentSearch(solver=solver))


def resolve_time(spec, params: PatientParameters, config: ScenarioConfig):
    """Turn a (possibly symbolic) treatment time into days."""
    if spec is None or isinstance(spec, (int, float)):
        return None if spec is None else float(spec)
    m = _SYMBOL.match(str(spec))
    if not m:
        raise ScenarioError(f"cannot parse treatment time {spec!r}")
    scale = float(m.group(1)) if m.group(1) else 1.0
    _, ev = _untreated(params, config.horizon, config.solver, config.detection_limit)
    symbol = m.group(2)
    if symbol == "t_DL":
        base = ev.t_detect
    elif symbol == "t_V":
        base = ev.t_v_max
    else:
        base = _early_time(params, config.solver)
    if base is None:
        raise ScenarioError(f"{symbol} does not exist for this patient")
    return scale * base


def _run_point(args):
    config, spec, eta_beta, eta_p, provenance = args
    params = config.params
    result = ScenarioResult(config.label, spec, None, eta_beta, eta_p, provenance=provenance)
    try:
        t_tr = resolve_time(spec, params, config)
        result.t_tr = t_tr
        base, ev = _untreated(params, config.horizon, config.solver, config.detection_limit)
        schedule = EfficacySchedule(t_tr, eta_beta, eta_p)
        pair = EfficacyPair(eta_beta, eta_p)
        if "thresholds" in config.outputs and t_tr is not None:
            U = float(base.U_at(min(t_tr, base.horizon)))
            result.thresholds = {
                "eta_c": critical_efficacy(params, U),
                "in_effective_set": effective_set_contains(params, U, pair),
            }
        if "metrics" in config.outputs:
            result.metrics = metrics_report(
                params, schedule, config.detection_limit, config.horizon,
                config.max_horizon, config.solver, untreated=base,
            )
            result.effective = result.metrics.effective
        elif "effectiveness" in config.outputs:
            if not schedule.is_treated:
                result.effective = False
            else:
                opts = EarlyTreatmentSearch(solver=config.solver)
                result.effective = not treated_peak_after(params, base, ev.t_v_max, t_tr, pair, opts)
        if "events" in config.outputs or "trajectory" in config.outputs:
            traj = integrate(params, schedule, horizon=config.horizon, options=config.solver)
            if "events" in config.outputs:
                result.events = locate_events(traj, detection_limit=config.detection_limit)
            if "trajectory" in config.outputs:
                result.trajectory = traj.resample(config.trajectory_points)
    except (ValueError, RuntimeError) as exc:
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def provenance(config: ScenarioConfig) -> dict:
    return {"config_hash": config.digest(), "seed": config.seed, "tool_version": __version__}


def run_scenario(config: ScenarioConfig) -> list:
    """Run every grid point of ``config``; per-run failures are recorded, not raised."""
    prov = provenance(config)
    points = [
        (config, spec, eb, ep, prov)
        for spec, eb, ep in itertools.product(config.t_tr, config.eta_beta, config.eta_p)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_run_point, points))
    return [_run_point(p) for p in points]
