"""Flat-file input and output: observation CSVs, configs and result exports."""

from __future__ import annotations

import csv
import json
import math
import warnings
from pathlib import Path

import yaml

from ..estimation.cost import ViralObservation

RUN_COLUMNS = ("patient", "t_tr", "eta_beta", "eta_p", "t_peak", "v_max", "delta_v_log10", "di", "effective")


class DataFormatError(ValueError):
    pass


def load_viral_csv(path) -> list:
    """Read ``t_dpi,viral_load`` rows; ``<DL`` marks a censored value."""
    path = Path(path)
    obs = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["t_dpi", "viral_load"]:
            raise DataFormatError(f"{path}:1: header must be 't_dpi,viral_load'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DataFormatError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            t_raw, v_raw = (c.strip() for c in row)
            censored = v_raw.startswith("<")
            try:
                t = float(t_raw)
                v = float(v_raw[1:] if censored else v_raw)
                obs.append(ViralObservation(t, v, censored))
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    times = [o.t for o in obs]
    if len(set(times)) != len(times):
        raise DataFormatError(f"{path}: duplicate observation times")
    if times != sorted(times):
        warnings.warn(f"{path}: observations were not sorted by time; sorting", stacklevel=2)
        obs.sort(key=lambda o: o.t)
    return obs


def load_config(path) -> dict:
    """Parse a YAML (or JSON) scenario config."""
    with Path(path).open() as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise DataFormatError(f"{path}: config must be a mapping")
    return data


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "item"):
        return value.item()
    return value


def write_rows(rows, fmt: str, path=None, columns=None, meta=None) -> str:
    """Serialise a list of flat dicts as CSV or JSON; write to ``path`` if given."""
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to export")
    if fmt == "csv":
        columns = list(columns or rows[0].keys())
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_csv_cell(row.get(c)) for c in columns))
        text = "\n".join(lines) + "\n"
    elif fmt == "json":
        payload = {"rows": _clean(rows)}
        if meta is not None:
            payload["provenance"] = _clean(meta)
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}; use csv or json")
    if path is not None:
        Path(path).write_text(text)
    return text


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_results(results, fmt: str, path=None) -> str:
    """Export scenario runs: one row each, with provenance in the JSON form."""
    results = list(results)
    if not results:
        raise ValueError("results must not be empty")
    rows = [r.row() for r in results]
    meta = results[0].provenance
    return write_rows(rows, fmt, path, columns=RUN_COLUMNS if fmt == "csv" else None, meta=meta)


def load_results_json(path) -> dict:
    return json.loads(Path(path).read_text())
