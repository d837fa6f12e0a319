"""Command-line entry point.

Every subcommand writes CSV or JSON to ``--out`` (stdout by default).
Failures exit non-zero with a one-line JSON error on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .. import __version__
from ..analysis import critical_efficacy
from ..dynamics.events import locate_events
from ..dynamics.model import EfficacySchedule, PatientParameters
from ..dynamics.solver import SolverOptions, integrate
from ..estimation import DEConfig, FitConfig, fit_patient, profile_ci
from .io import export_results, load_config, load_viral_csv, write_rows
from .registry import get_patient
from .reports import TABLE2_COLUMNS, early_treatment_rows, table2_rows
from .scenarios import ScenarioConfig, resolve_time, run_scenario


class CLIError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("UsageError", message, code=2)


def _fail(kind, message, code=1):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message)}) + "\n")
    sys.exit(code)


def _time_arg(text):
    if text.lower() == "none":
        return None
    try:
        return float(text)
    except ValueError:
        return text


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _common(p):
    p.add_argument("--patient", help="registry id A-I")
    p.add_argument("--config", help="YAML/JSON file whose keys provide defaults")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--detection-limit", type=float, default=None)
    p.add_argument("--model", choices=("full", "reduced"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="antiviral", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="one run: trajectory and events")
    _common(p)
    p.add_argument("--t-tr", type=_time_arg, default=None)
    p.add_argument("--eta-beta", type=float, default=0.0)
    p.add_argument("--eta-p", type=float, default=0.0)
    p.add_argument("--points", type=int, default=2000)

    p = sub.add_parser("metrics", help="effectiveness metrics for one treatment")
    _common(p)
    p.add_argument("--t-tr", type=_time_arg, required=False)
    p.add_argument("--eta-beta", type=float, default=0.0)
    p.add_argument("--eta-p", type=float, default=0.0)
    p.add_argument("--max-horizon", type=float, default=None)

    p = sub.add_parser("thresholds", help="critical efficacy over time and the combined boundary")
    _common(p)
    p.add_argument("--t-min", type=float, default=None)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--t-tr", type=_time_arg, default=None, help="also emit the combined boundary here")

    p = sub.add_parser("sweep", help="scenario grid from a config file")
    _common(p)
    p.add_argument("--t-tr", type=lambda s: [_time_arg(x) for x in s.split(",")], default=None)
    p.add_argument("--eta-beta", type=_float_list, default=None)
    p.add_argument("--eta-p", type=_float_list, default=None)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("fit", help="fit parameters to a viral-load CSV")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--free", default="beta,delta,p")
    p.add_argument("--generations", type=int, default=200)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--profile", default=None, help="parameter to profile (beta, delta or p)")

    p = sub.add_parser("table2", help="untreated characterisation of the built-in patients")
    _common(p)

    p = sub.add_parser("t-e", help="early treatment time per patient")
    _common(p)
    p.add_argument("--eta-p", type=float, default=None, help="fixed efficacy (default: maximal over efficacies)")
    p.add_argument("--method", choices=("simulation", "closed_form"), default="simulation")
    return parser


def _settings(args) -> dict:
    cfg = load_config(args.config) if args.config else {}
    for key, attr in (("patient", "patient"), ("horizon", "horizon"), ("seed", "seed"),
                      ("detection_limit", "detection_limit"), ("model_kind", "model")):
        value = getattr(args, attr, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _params(cfg) -> PatientParameters:
    patient = cfg.get("patient")
    if patient is None:
        raise CLIError("a patient is required (--patient or config key 'patient')")
    if isinstance(patient, dict):
        return PatientParameters(**patient)
    return get_patient(str(patient))


def _solver(cfg) -> SolverOptions:
    return SolverOptions(model_kind=cfg.get("model_kind", "full"), rel_tol=cfg.get("rel_tol", 1e-8))


def _scenario(cfg, **overrides) -> ScenarioConfig:
    data = {k: v for k, v in cfg.items() if k in ScenarioConfig.__dataclass_fields__}
    data.setdefault("horizon", 100.0)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ScenarioConfig.from_dict(data)


def cmd_simulate(args, cfg):
    params = _params(cfg)
    scen = _scenario(cfg, outputs=["events"])
    t_tr = resolve_time(args.t_tr, params, scen)
    schedule = EfficacySchedule(t_tr, args.eta_beta, args.eta_p)
    traj = integrate(params, schedule, horizon=scen.horizon, options=_solver(cfg))
    events = locate_events(traj, detection_limit=scen.detection_limit)
    sample = traj.resample(args.points)
    rows = [dict(zip(("t", "U", "I", "V"), map(float, r))) for r in zip(*(sample[k] for k in "tUIV"))]
    meta = {"events": events.as_dict(), "params": params.as_dict(), "t_tr": t_tr,
            "eta_beta": args.eta_beta, "eta_p": args.eta_p}
    return write_rows(rows, args.format, args.out, meta=meta)


def cmd_metrics(args, cfg):
    t_tr = args.t_tr if args.t_tr is not None else cfg.get("t_tr")
    if isinstance(t_tr, list):
        raise CLIError("metrics takes a single treatment time; use sweep for grids")
    scen = _scenario(cfg, t_tr=[t_tr], eta_beta=[args.eta_beta], eta_p=[args.eta_p],
                     outputs=["metrics", "thresholds"], max_horizon=args.max_horizon)
    (res,) = run_scenario(scen)
    if res.error:
        raise CLIError(res.error)
    return export_results([res], args.format, args.out)


def cmd_thresholds(args, cfg):
    params = _params(cfg)
    scen = _scenario(cfg)
    traj = integrate(params, horizon=scen.horizon, options=_solver(cfg))
    ev = locate_events(traj, detection_limit=scen.detection_limit)
    t_min = args.t_min if args.t_min is not None else (ev.t_v_min or 0.0)
    t_max = args.t_max if args.t_max is not None else (ev.t_v_max or scen.horizon)
    rows = []
    for t in np.linspace(t_min, t_max, args.n):
        U = float(traj.U_at(t))
        rows.append({"curve": "eta_c", "t_tr": float(t), "U": U, "eta_beta": 0.0, "eta_p": critical_efficacy(params, U)})
    if args.t_tr is not None:
        t_tr = resolve_time(args.t_tr, params, scen)
        U = float(traj.U_at(t_tr))
        for eb in np.linspace(0.0, 0.99, args.n):
            ep = max(0.0, 1.0 - params.critical_cells / (U * (1.0 - eb)))
            rows.append({"curve": "boundary", "t_tr": t_tr, "U": U, "eta_beta": float(eb), "eta_p": ep})
    return write_rows(rows, args.format, args.out)


def cmd_sweep(args, cfg):
    if "patient" not in cfg:
        raise CLIError("sweep needs a patient (config key or --patient)")
    if "horizon" not in cfg:
        raise CLIError("sweep needs an explicit horizon (config key or --horizon)")
    scen = _scenario(cfg, t_tr=args.t_tr, eta_beta=args.eta_beta, eta_p=args.eta_p, workers=args.workers)
    return export_results(run_scenario(scen), args.format, args.out)


def cmd_fit(args, cfg):
    data = load_viral_csv(args.data)
    base = _params(cfg) if cfg.get("patient") is not None else FitConfig().base
    de = DEConfig(population_size=args.population, max_generations=args.generations,
                  seed=cfg.get("seed", 0) or 0)
    fc = FitConfig(free_params=tuple(s.strip() for s in args.free.split(",")), base=base, de=de)
    fit = fit_patient(data, fc)
    row = dict(fit.params.as_dict(), rmsle=fit.rmsle, generations=fit.generations_used,
               converged=fit.converged, nfev=fit.nfev)
    if args.profile:
        iv = profile_ci(data, fit, args.profile, config=fc)
        row.update({f"{args.profile}_lower": iv.lower, f"{args.profile}_upper": iv.upper,
                    f"{args.profile}_lower_open": iv.lower_open, f"{args.profile}_upper_open": iv.upper_open})
    return write_rows([row], args.format, args.out, meta={"seed": de.seed, "history": fit.history,
                                                          "tool_version": __version__})


def cmd_table2(args, cfg):
    patients = [cfg["patient"]] if cfg.get("patient") else None
    rows = table2_rows(patients, horizon=cfg.get("horizon", 100.0), solver=_solver(cfg))
    return write_rows(rows, args.format, args.out, columns=TABLE2_COLUMNS)


def cmd_te(args, cfg):
    patients = [cfg["patient"]] if cfg.get("patient") else None
    rows = early_treatment_rows(patients, args.eta_p, args.method)
    return write_rows(rows, args.format, args.out)


COMMANDS = {
    "simulate": cmd_simulate, "metrics": cmd_metrics, "thresholds": cmd_thresholds,
    "sweep": cmd_sweep, "fit": cmd_fit, "table2": cmd_table2, "t-e": cmd_te,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _settings(args)
        text = COMMANDS[args.command](args, cfg)
        if args.out is None:
            sys.stdout.write(text)
    except Exception as exc:  # noqa: BLE001 - reported as a machine-readable error
        _fail(type(exc).__name__, exc.args[0] if isinstance(exc, KeyError) and exc.args else exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
