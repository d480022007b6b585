"""CSV/JSON persistence for initial conditions, parameters, traces and reports.

Floats are written with ``repr`` so every value round-trips bit for bit.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Union

import numpy as np

from .energy import Theta
from .env import DEFAULT_ENV, EnvParams
from .experiment import HistogramReport, InitialConditionSet
from .partition import DEFAULT_PARTITION, PartitionedTheta, RegionPartition, region_of_zv
from .qsgd import QsgdRecord, QsgdTrace

PathLike = Union[str, Path]


class SchemaError(ValueError):
    pass


def _f(x) -> str:
    return repr(float(x))


def _read_rows(path: PathLike, expected: list[list[str]]) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if header not in expected:
            raise SchemaError(f"{path}: header {header} not one of {expected}")
        return header, list(reader)


def _float(path, i, row, key) -> float:
    try:
        return float(row[key])
    except (TypeError, ValueError):
        raise SchemaError(f"{path}: row {i}: bad value for {key!r}: {row[key]!r}") from None


# -- initial conditions ----------------------------------------------------------

def save_ics(path: PathLike, ics: InitialConditionSet) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        tagged = ics.regions is not None
        w.writerow(["z", "v", "region"] if tagged else ["z", "v"])
        for i, (z, v) in enumerate(ics.states):
            row = [_f(z), _f(v)]
            if tagged:
                row.append(str(int(ics.regions[i])))
            w.writerow(row)


def load_ics(path: PathLike, role: str = "train", env: EnvParams = DEFAULT_ENV,
             partition: RegionPartition = DEFAULT_PARTITION) -> InitialConditionSet:
    header, rows = _read_rows(path, [["z", "v"], ["z", "v", "region"]])
    if not rows:
        raise SchemaError(f"{path}: no initial conditions")
    states = np.empty((len(rows), 2))
    regions = [] if "region" in header else None
    for i, row in enumerate(rows):
        z, v = _float(path, i, row, "z"), _float(path, i, row, "v")
        if not (np.isfinite(z) and np.isfinite(v) and env.contains(z, v)):
            raise SchemaError(f"{path}: row {i}: state ({z}, {v}) outside the state box")
        states[i] = z, v
        if regions is not None:
            r = row["region"]
            if r not in ("1", "2", "3", "4"):
                raise SchemaError(f"{path}: row {i}: region must be 1..4, got {r!r}")
            if region_of_zv(z, v, partition) != int(r):
                raise SchemaError(f"{path}: row {i}: state ({z}, {v}) is not in region {r}")
            regions.append(int(r))
    return InitialConditionSet(states, role, None if regions is None else np.array(regions))


# -- parameters --------------------------------------------------------------------

def save_theta(path: PathLike, param) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if isinstance(param, PartitionedTheta):
            w.writerow(["region", "theta1", "theta2"])
            for r, th in enumerate(param, start=1):
                w.writerow([r, _f(th[0]), _f(th[1])])
        else:
            w.writerow(["theta1", "theta2"])
            w.writerow([_f(param[0]), _f(param[1])])


def load_theta(path: PathLike) -> Union[Theta, PartitionedTheta]:
    header, rows = _read_rows(path, [["theta1", "theta2"], ["region", "theta1", "theta2"]])
    vals = [(_float(path, i, r, "theta1"), _float(path, i, r, "theta2")) for i, r in enumerate(rows)]
    if not all(np.isfinite(a) and np.isfinite(b) for a, b in vals):
        raise SchemaError(f"{path}: non-finite parameter")
    if header[0] != "region":
        if len(vals) != 1:
            raise SchemaError(f"{path}: expected one parameter row, got {len(vals)}")
        return Theta(*vals[0])
    if [r["region"] for r in rows] != ["1", "2", "3", "4"]:
        raise SchemaError(f"{path}: expected rows for regions 1..4 in order")
    return PartitionedTheta(vals)


# -- traces ----------------------------------------------------------------------------

TRACE_COLUMNS = ["n", "t", "a", "theta1", "theta2", "psi1", "psi2", "gamma", "xi1", "xi2"]


def save_trace(path: PathLike, trace: QsgdTrace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace:
            w.writerow([r.n, _f(r.t), _f(r.a), _f(r.theta[0]), _f(r.theta[1]),
                        _f(r.psi[0]), _f(r.psi[1]), _f(r.gamma_value), _f(r.xi[0]), _f(r.xi[1])])


def load_trace(path: PathLike) -> QsgdTrace:
    _, rows = _read_rows(path, [TRACE_COLUMNS])
    trace = QsgdTrace()
    for i, row in enumerate(rows):
        g = lambda k: _float(path, i, row, k)  # noqa: E731
        trace.records.append(QsgdRecord(int(row["n"]), g("t"), g("a"),
                                        np.array([g("theta1"), g("theta2")]),
                                        np.array([g("xi1"), g("xi2")]),
                                        np.array([g("psi1"), g("psi2")]), g("gamma")))
    return trace


# -- JSON ----------------------------------------------------------------------------------

def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: PathLike, obj) -> None:
    Path(path).write_text(dumps(obj))


def save_report(path: PathLike, report: HistogramReport) -> None:
    write_json(path, report.to_dict())


def load_report(path: PathLike) -> HistogramReport:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: report must be a JSON object")
    try:
        return HistogramReport.from_dict(data)
    except (ValueError, TypeError, KeyError) as exc:
        raise SchemaError(f"{path}: {exc}") from None


def save_bins(path: PathLike, report: HistogramReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["left", "right", "count"])
        for lo, hi, c in zip(report.bin_edges, report.bin_edges[1:], report.counts):
            w.writerow([_f(lo), _f(hi), c])


def save_episode(path: PathLike, result) -> None:
    """Trajectory dump with columns ``step,z,v,u``; ``u`` is empty on the last row."""
    if result.trajectory is None:
        raise ValueError("episode was not recorded")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "z", "v", "u"])
        for k, s in enumerate(result.trajectory):
            u = _f(result.controls[k]) if k < len(result.controls) else ""
            w.writerow([k, _f(s[0]), _f(s[1]), u])
