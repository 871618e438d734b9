"""Intervention projections and the WHO End-TB target check."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HorizonTooShort, InvalidOverride, ModelError
from .model import ModelParams, StateVec, get_param, initial_state, with_param
from .simulate import (DEFAULT_DT, START_YEAR, Trajectory, annual_new_cases, case_matrix,
                       concatenate, integrate)

INTERVENTION_START = 2022
MAX_HORIZON = 2100
REFERENCE_YEAR = 2015
REFERENCE_CASES = 864015
# 90% below the 2015 national total, rounded to whole cases.
WHO_THRESHOLD = 86402
WHO_TARGET_YEAR = 2035
MIN_ASSESSMENT_HORIZON = 2060


@dataclass(frozen=True)
class Override:
    path: str
    value: float
    mode: str = "set"  # "set" replaces the value, "scale" multiplies it

    def apply(self, p: ModelParams) -> ModelParams:
        if self.mode not in ("set", "scale"):
            raise InvalidOverride(f"override mode must be 'set' or 'scale', got {self.mode!r}")
        try:
            current = get_param(p, self.path)
            if self.mode == "set":
                new = self.value
            else:
                new = np.asarray(current, dtype=float) * self.value
            return with_param(p, self.path, new)
        except ModelError as exc:
            raise InvalidOverride(f"cannot apply {self.mode} {self.path}={self.value}: {exc}") from None


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    overrides: tuple[Override, ...] = ()
    start_year: int = INTERVENTION_START
    horizon: int = 2035

    def __post_init__(self):
        object.__setattr__(self, "overrides", tuple(self.overrides))
        if self.start_year < START_YEAR:
            raise InvalidOverride(f"interventions cannot start before {START_YEAR}")
        if self.horizon > MAX_HORIZON:
            raise ModelError(f"horizon must not exceed {MAX_HORIZON}")
        if self.horizon < self.start_year:
            raise ModelError("horizon precedes the intervention start")

    def apply(self, p: ModelParams) -> ModelParams:
        for ov in self.overrides:
            p = ov.apply(p)
        return p


@dataclass(frozen=True)
class Projection:
    name: str
    years: tuple[int, ...]
    cases: np.ndarray  # (n_years, 3)
    threshold: float = WHO_THRESHOLD
    totals: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "totals", self.cases.sum(axis=1))

    def total(self, year: int) -> float:
        return float(self.totals[self.years.index(year)])

    @property
    def target_year_reached(self) -> int | None:
        return first_year_below(self, self.threshold)


def first_year_below(proj: Projection, threshold: float, after: int | None = None) -> int | None:
    for year, total in zip(proj.years, proj.totals):
        if (after is None or year >= after) and total <= threshold:
            return year
    return None


def _baseline_segment(base: ModelParams, start_year: int, dt: float, y0: StateVec | None) -> Trajectory:
    y0 = initial_state() if y0 is None else y0
    return integrate(base, y0, float(START_YEAR), float(start_year), dt)


def _project(base_traj: Trajectory | None, p: ModelParams, spec: ScenarioSpec, dt: float,
             measure: str, y0: StateVec | None) -> Projection:
    end = float(spec.horizon + 1)
    if base_traj is None:
        traj = integrate(p, initial_state() if y0 is None else y0, float(START_YEAR), end, dt)
    else:
        tail = integrate(p, base_traj.states[-1], base_traj.t1, end, dt)
        traj = concatenate(base_traj, tail)
    series = annual_new_cases(traj, START_YEAR, spec.horizon, measure=measure)
    return Projection(name=spec.name, years=tuple(r.year for r in series), cases=case_matrix(series))


def run_scenario(base: ModelParams, spec: ScenarioSpec, dt: float = DEFAULT_DT,
                 measure: str = "activation", y0: StateVec | None = None) -> Projection:
    """Annual cases from 2005 to ``spec.horizon``.

    ``base`` drives the trajectory up to ``spec.start_year``; the overridden
    parameters take over from that point on the same trajectory.
    """
    p = spec.apply(base)
    base_traj = None if spec.start_year == START_YEAR else _baseline_segment(base, spec.start_year, dt, y0)
    return _project(base_traj, p, spec, dt, measure, y0)


def scenario_sweep(base: ModelParams, axis: str, values, horizon: int = 2035, mode: str = "set",
                   start_year: int = INTERVENTION_START, dt: float = DEFAULT_DT,
                   measure: str = "activation", y0: StateVec | None = None) -> list[Projection]:
    """One projection per value of ``axis``; the pre-intervention segment is shared."""
    specs = [ScenarioSpec(name=f"{axis}={'x' if mode == 'scale' else ''}{v:g}",
                          overrides=(Override(axis, float(v), mode),),
                          start_year=start_year, horizon=horizon) for v in values]
    params = [s.apply(base) for s in specs]
    base_traj = None if start_year == START_YEAR else _baseline_segment(base, start_year, dt, y0)
    return [_project(base_traj, p, s, dt, measure, y0) for p, s in zip(params, specs)]


def who_target_assessment(proj: Projection, threshold: float = WHO_THRESHOLD,
                          target_year: int = WHO_TARGET_YEAR) -> dict:
    """First year national cases fall to ``threshold`` and whether that is by ``target_year``."""
    if proj.years[-1] < MIN_ASSESSMENT_HORIZON:
        raise HorizonTooShort(f"projection ends in {proj.years[-1]}; need at least {MIN_ASSESSMENT_HORIZON}")
    reached = first_year_below(proj, threshold)
    report = {
        "scenario": proj.name,
        "threshold": float(threshold),
        "target_year": target_year,
        "year_reached": reached,
        "met_by_target": reached is not None and reached <= target_year,
    }
    for year in (REFERENCE_YEAR, 2025, target_year):
        if year in proj.years:
            report[f"cases_{year}"] = proj.total(year)
    return report


def summary(proj: Projection) -> dict:
    """Plot-ready digest: 2025/2035 totals and the WHO target year."""
    out = {"scenario": proj.name, "target_year": proj.target_year_reached}
    for year in (2025, 2035):
        out[f"total_{year}"] = proj.total(year) if year in proj.years else None
    return out
