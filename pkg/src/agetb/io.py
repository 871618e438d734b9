"""Readers and writers for every file the tool consumes or produces.

Series are CSV, nested summaries JSON. Floats are written with ``repr`` so a
file read back by the matching loader reproduces the values exactly.
"""
from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

import numpy as np

from . import paramfile
from .calibrate import CaseRow, CaseSeries, FitResult
from .cluster import ClusterResult, IncidenceTable
from .errors import ConsistencyError, MissingKey, ParseError, UnknownKey
from .model import PRESETS, ModelParams, preset
from .scenarios import Projection
from .sensitivity import PrccResult
from .simulate import AnnualIncidence, Trajectory

CASE_HEADER = ["year", "g1", "g2", "g3", "total"]
STATE_COLUMNS = [f"{c}{g}" for g in (1, 2, 3) for c in "SEIR"]


def _num(x) -> str:
    return repr(float(x))


def bundled(name: str) -> Path:
    """Path of a file shipped in the package data directory."""
    return Path(str(resources.files("agetb").joinpath(f"data/{name}")))


# -- case data -----------------------------------------------------------------


def _parse_count(text, row, column):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", row=row, column=column) from None


def load_case_series(path=None) -> CaseSeries:
    """Annual case counts with header ``year,g1,g2,g3,total``.

    Group cells may be empty (all three together) for years with only a
    national total. A total that differs from the group sum by more than one
    case raises :class:`ConsistencyError`.
    """
    path = bundled("table3_cases.csv") if path is None else Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path} is empty", row=1)
        if [h.strip() for h in header] != CASE_HEADER:
            raise ParseError(f"expected header {','.join(CASE_HEADER)}", row=1)
        rows = []
        for lineno, cells in enumerate(reader, start=2):
            if not any(c.strip() for c in cells):
                continue
            if len(cells) != 5:
                raise ParseError(f"expected 5 cells, got {len(cells)}", row=lineno)
            cells = [c.strip() for c in cells]
            try:
                year = int(cells[0])
            except ValueError:
                raise ParseError(f"bad year {cells[0]!r}", row=lineno, column="year") from None
            if not cells[4]:
                raise ParseError("total is required", row=lineno, column="total")
            total = _parse_count(cells[4], lineno, "total")
            present = [bool(c) for c in cells[1:4]]
            if all(present):
                groups = tuple(_parse_count(c, lineno, f"g{i}") for i, c in enumerate(cells[1:4], 1))
                if abs(sum(groups) - total) > 1:
                    raise ConsistencyError(f"year {year}: total {total:g} != group sum {sum(groups):g}")
            elif not any(present):
                groups = None
            else:
                raise ParseError("group cells must be all present or all empty", row=lineno)
            rows.append(CaseRow(year=year, groups=groups, total=total))
    if not rows:
        raise ParseError(f"{path} has no data rows", row=2)
    return CaseSeries(tuple(rows))


def write_case_series(series: CaseSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CASE_HEADER)
        for r in series.rows:
            groups = ["", "", ""] if r.groups is None else [_num(g) for g in r.groups]
            w.writerow([r.year, *groups, _num(r.total)])


def load_incidence_table(path=None) -> IncidenceTable:
    """Age-bin table with columns ``age_bin,mean_cases,mean_rate``."""
    path = bundled("table1_incidence.csv") if path is None else Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "age_bin" not in reader.fieldnames or "mean_rate" not in reader.fieldnames:
            raise ParseError("expected columns age_bin, mean_rate", row=1)
        labels, rates, cases = [], [], []
        for lineno, row in enumerate(reader, start=2):
            labels.append(row["age_bin"].strip())
            rates.append(_parse_count(row["mean_rate"], lineno, "mean_rate"))
            if row.get("mean_cases"):
                cases.append(_parse_count(row["mean_cases"], lineno, "mean_cases"))
    if not labels:
        raise ParseError(f"{path} has no data rows", row=2)
    return IncidenceTable(tuple(labels), tuple(rates), tuple(cases) if len(cases) == len(labels) else None)


# -- parameters ----------------------------------------------------------------

REQUIRED_KEYS = ("A", "rho", "omega", "mu", "theta", "sigma", "gamma", "d", "a", "eps", "beta")


def params_from_text(text: str) -> ModelParams:
    values = paramfile.parse(text)
    unknown = sorted(set(values) - set(paramfile.KNOWN_KEYS))
    if unknown:
        raise UnknownKey(f"unknown parameter key(s): {', '.join(unknown)}")
    merged = {}
    if "preset" in values:
        merged.update(preset(values.pop("preset")).to_dict())
        if "n_mode" in values and values["n_mode"] != merged["n_mode"] and "n_fixed" not in values:
            merged["n_fixed"] = None
    merged.update(values)
    missing = [k for k in REQUIRED_KEYS if k not in merged]
    if missing:
        raise MissingKey(f"missing parameter key(s): {', '.join(missing)}")
    return ModelParams.from_dict(merged)


def load_params(path) -> ModelParams:
    """Parameter document; a ``preset`` key supplies defaults for absent keys."""
    return params_from_text(Path(path).read_text())


def dump_params(p: ModelParams) -> str:
    return paramfile.dump(p.to_dict())


def resolve_params(config: str | None) -> ModelParams:
    """A preset name or a parameter-file path (default: ``varying_n``)."""
    if config is None:
        return preset("varying_n")
    if config in PRESETS:
        return preset(config)
    return load_params(config)


# -- results -----------------------------------------------------------------


def write_trajectory(traj: Trajectory, path, every: int = 1) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", *STATE_COLUMNS, "flux1", "flux2", "flux3"])
        for k in range(0, len(traj.times), every):
            w.writerow([_num(traj.times[k]), *map(_num, traj.states[k]), *map(_num, traj.new_case_flux[k])])


def read_trajectory(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(c) for c in row] for row in reader])
    return {
        "times": data[:, 0],
        "states": data[:, 1:13],
        "new_case_flux": data[:, 13:16],
        "header": header,
    }


def write_annual(series: list[AnnualIncidence], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CASE_HEADER)
        for row in series:
            w.writerow([row.year, *map(_num, row.cases), _num(row.total)])


def read_annual(path) -> list[AnnualIncidence]:
    return [AnnualIncidence(year=r.year, cases=r.groups) for r in load_case_series(path).rows]


PROJECTION_HEADER = ["scenario", "year", "g1", "g2", "g3", "total"]


def write_projections(projections, path) -> None:
    """Long-format table, one row per scenario and year."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROJECTION_HEADER)
        for proj in projections:
            for year, cases in zip(proj.years, proj.cases):
                w.writerow([proj.name, year, *map(_num, cases), _num(cases.sum())])


def read_projections(path) -> list[Projection]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PROJECTION_HEADER:
            raise ParseError(f"expected header {','.join(PROJECTION_HEADER)}", row=1)
        grouped: dict[str, list] = {}
        for row in reader:
            grouped.setdefault(row["scenario"], []).append(
                (int(row["year"]), [float(row[g]) for g in ("g1", "g2", "g3")]))
    return [Projection(name=name, years=tuple(y for y, _ in rows), cases=np.array([c for _, c in rows]))
            for name, rows in grouped.items()]


def write_prcc(result: PrccResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", "prcc"])
        for name, value in result.ranked():
            w.writerow([name, _num(value)])


def read_prcc(path) -> dict[str, float]:
    with open(path, newline="") as fh:
        return {row["parameter"]: float(row["prcc"]) for row in csv.DictReader(fh)}


def write_clusters(result: ClusterResult, rates, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["age_bin", "mean_rate", "cluster"])
        for label, rate, c in zip(result.labels, rates, result.assignment):
            w.writerow([label, _num(rate), c])


def read_clusters(path) -> dict[str, int]:
    with open(path, newline="") as fh:
        return {row["age_bin"]: int(row["cluster"]) for row in csv.DictReader(fh)}


def write_residuals(result: FitResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["year", "obs1", "obs2", "obs3", "pred1", "pred2", "pred3", "res1", "res2", "res3"])
        for y, o, p, r in zip(result.years, result.observed, result.predicted, result.residuals):
            w.writerow([y, *map(_num, o), *map(_num, p), *map(_num, r)])


def read_residuals(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    years = np.array([int(r["year"]) for r in rows])
    get = lambda prefix: np.array([[float(r[f"{prefix}{g}"]) for g in (1, 2, 3)] for r in rows])  # noqa: E731
    return {"years": years, "observed": get("obs"), "predicted": get("pred"), "residuals": get("res")}


def fit_report(result: FitResult, holdout: dict[int, float] | None = None) -> dict:
    report = {
        "measure": result.measure,
        "dt": result.dt,
        "fitted": result.fitted,
        "r2": result.r2,
        "converged": result.converged,
        "iterations": result.iterations,
        "evaluations": result.evals,
        "stages": [
            {
                "parameters": list(s.names),
                "group": s.group + 1,
                "start": list(s.start),
                "estimate": list(s.x),
                "loss": s.loss,
                "evaluations": s.evals,
                "iterations": s.iterations,
                "converged": s.converged,
                "simplex_diameter": s.diameter,
                "loss_trace": list(s.trace),
            }
            for s in result.stages
        ],
    }
    if holdout is not None:
        report["holdout_relative_error"] = {str(k): v for k, v in holdout.items()}
    return report


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True, default=_json_default)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
