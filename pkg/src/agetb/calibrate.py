"""Staged least-squares calibration against annual case counts.

Stage 1 fits (beta1, omega) to group-1 cases, stage 2 fits beta2 to group-2
cases and stage 3 fits beta3 to group-3 cases, each with the earlier stages
frozen. Every stage minimises the unweighted sum of squared residuals with a
bounded Nelder-Mead search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataGap, DegenerateSeries, ModelError
from .model import ModelParams, StateVec, get_param, initial_state, with_param
from .simulate import START_YEAR, annual_new_cases, case_matrix, integrate

FIT_YEARS = (2005, 2018)
HOLDOUT_YEARS = (2019, 2020, 2021)
BETA_BOUNDS = (1e-8, 1e-2)
OMEGA_BOUNDS = (0.0, 1.0)
STAGES = (
    (("beta1", "omega"), 0),
    (("beta2",), 1),
    (("beta3",), 2),
)


@dataclass(frozen=True)
class CaseRow:
    year: int
    groups: tuple[float, float, float] | None
    total: float


@dataclass(frozen=True)
class CaseSeries:
    rows: tuple[CaseRow, ...]

    def __post_init__(self):
        years = [r.year for r in self.rows]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise ModelError("case series years must be strictly increasing")

    @property
    def years(self) -> list[int]:
        return [r.year for r in self.rows]

    def row(self, year: int) -> CaseRow:
        for r in self.rows:
            if r.year == year:
                return r
        raise DataGap(f"no data for year {year}")

    def group_matrix(self, first: int, last: int) -> np.ndarray:
        """(n_years, 3) per-group counts; DataGap if any year or group is missing."""
        out = []
        for year in range(first, last + 1):
            r = self.row(year)
            if r.groups is None:
                raise DataGap(f"per-group counts missing for {year}")
            out.append(r.groups)
        return np.array(out, dtype=float)

    def totals(self, years) -> np.ndarray:
        return np.array([self.row(y).total for y in years], dtype=float)


@dataclass(frozen=True)
class FitConfig:
    dt: float = 1e-2
    measure: str = "activation"
    max_evals: int = 2000
    simplex_scale: float = 0.1
    ftol_rel: float = 1e-6
    xtol_rel: float = 1e-4
    cycles: int = 1
    years: tuple[int, int] = FIT_YEARS


@dataclass(frozen=True)
class StageResult:
    names: tuple[str, ...]
    group: int
    start: tuple[float, ...]
    x: tuple[float, ...]
    loss: float
    evals: int
    iterations: int
    converged: bool
    diameter: float
    trace: tuple[float, ...]


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    years: tuple[int, ...]
    observed: np.ndarray
    predicted: np.ndarray
    r2: float
    stages: tuple[StageResult, ...]
    measure: str
    dt: float

    @property
    def fitted(self) -> dict[str, float]:
        return {k: float(get_param(self.params, k)) for k in ("beta1", "beta2", "beta3", "omega")}

    @property
    def residuals(self) -> np.ndarray:
        """observed - predicted, (n_years, 3)."""
        return self.observed - self.predicted

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.stages)

    @property
    def iterations(self) -> int:
        return sum(s.iterations for s in self.stages)

    @property
    def evals(self) -> int:
        return sum(s.evals for s in self.stages)

    @property
    def loss_trace(self) -> tuple[float, ...]:
        return tuple(v for s in self.stages for v in s.trace)


def r_squared(actual, predicted) -> float:
    """Coefficient of determination ``1 - RSS/TSS``."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape != predicted.shape or actual.ndim != 1 or len(actual) < 2:
        raise DegenerateSeries("need two equal-length series with at least two points")
    tss = float(np.sum((actual - actual.mean()) ** 2))
    if tss == 0.0:
        raise DegenerateSeries("actual values are all identical")
    rss = float(np.sum((actual - predicted) ** 2))
    return 1.0 - rss / tss


# -- Nelder-Mead -------------------------------------------------------------


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    evals: int
    iterations: int
    converged: bool
    diameter: float
    trace: list = field(default_factory=list)


def _reflect_into(x, lo, hi):
    x = np.array(x, dtype=float)
    for _ in range(4):
        x = np.where(x < lo, 2 * lo - x, x)
        x = np.where(x > hi, 2 * hi - x, x)
    return np.clip(x, lo, hi)


def nelder_mead(fun, x0, lower, upper, *, scale=0.1, ftol_rel=1e-6, xtol_rel=1e-4,
                max_evals=2000, ftol_abs=1e-8) -> SimplexResult:
    """Minimise ``fun`` inside a box.

    The initial simplex steps each coordinate by ``scale`` times its start
    value. Trial points outside the box are mirrored back across the violated
    bound. Convergence requires the spread of simplex values to fall below
    ``ftol_rel * |best| + ftol_abs`` and the simplex diameter (relative to the best
    point) to fall below ``xtol_rel``.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    x0 = _reflect_into(x0, lo, hi)
    m = len(x0)
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        v = fun(x)
        return v if math.isfinite(v) else math.inf

    if max_evals <= 0:
        return SimplexResult(x=x0, fun=math.nan, evals=0, iterations=0, converged=False, diameter=math.inf)

    simplex = [x0]
    for j in range(m):
        step = scale * x0[j] if x0[j] != 0 else scale * (hi[j] - lo[j])
        v = x0.copy()
        v[j] += step
        if v[j] > hi[j]:
            v[j] = x0[j] - step
        simplex.append(_reflect_into(v, lo, hi))
    simplex = np.array(simplex)
    values = np.array([f(v) for v in simplex[: max_evals]] + [math.inf] * max(0, m + 1 - max_evals))

    def diameter():
        ref = np.maximum(np.abs(simplex[0]), 1e-300)
        return float(np.max(np.abs(simplex[1:] - simplex[0]) / ref)) if m else 0.0

    def done():
        spread = values[-1] - values[0]
        return bool(math.isfinite(spread) and spread <= ftol_rel * abs(values[0]) + ftol_abs
                    and diameter() <= xtol_rel)

    iterations = 0
    trace = []
    order = np.argsort(values, kind="stable")
    simplex, values = simplex[order], values[order]
    while evals < max_evals and not done():
        iterations += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = _reflect_into(centroid + (centroid - worst), lo, hi)
        fr = f(xr)
        if fr < values[0]:
            xe = _reflect_into(centroid + 2.0 * (centroid - worst), lo, hi)
            fe = f(xe) if evals < max_evals else math.inf
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = _reflect_into(centroid + 0.5 * (xr - centroid), lo, hi)
                fc = f(xc) if evals < max_evals else math.inf
                accept = fc <= fr
            else:
                xc = _reflect_into(centroid + 0.5 * (worst - centroid), lo, hi)
                fc = f(xc) if evals < max_evals else math.inf
                accept = fc < values[-1]
            if accept:
                simplex[-1], values[-1] = xc, fc
            else:
                for j in range(1, m + 1):
                    if evals >= max_evals:
                        break
                    simplex[j] = _reflect_into(simplex[0] + 0.5 * (simplex[j] - simplex[0]), lo, hi)
                    values[j] = f(simplex[j])
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        trace.append(float(values[0]))
    return SimplexResult(x=simplex[0].copy(), fun=float(values[0]), evals=evals, iterations=iterations,
                         converged=bool(done()), diameter=diameter(), trace=trace)


# -- model predictions ---------------------------------------------------------


def predict_cases(p: ModelParams, first: int, last: int, dt: float = 1e-2,
                  measure: str = "activation", y0: StateVec | None = None) -> np.ndarray:
    """Per-group annual cases (n_years, 3) from the 2005 initial state."""
    y0 = initial_state() if y0 is None else y0
    traj = integrate(p, y0, float(START_YEAR), float(last + 1), dt)
    return case_matrix(annual_new_cases(traj, first, last, measure=measure))


def fit_quality(p: ModelParams, data: CaseSeries, dt: float = 1e-2, measure: str = "activation",
                years: tuple[int, int] = FIT_YEARS) -> float:
    """R^2 of annual totals for parameters ``p`` (no fitting)."""
    first, last = years
    pred = predict_cases(p, first, last, dt=dt, measure=measure)
    return r_squared(data.totals(range(first, last + 1)), pred.sum(axis=1))


def _bounds(name):
    return OMEGA_BOUNDS if name == "omega" else BETA_BOUNDS


def fit(data: CaseSeries, base: ModelParams, config: FitConfig | None = None,
        start: dict | None = None) -> FitResult:
    """Staged fit of (beta1, omega), beta2, beta3 to per-group annual cases.

    ``start`` optionally overrides the starting values (default: ``base``).
    A stage that exhausts its evaluation budget keeps its best point and is
    reported with ``converged=False``.
    """
    config = config or FitConfig()
    first, last = config.years
    observed = data.group_matrix(first, last)
    p = base
    for name, value in (start or {}).items():
        p = with_param(p, name, value)

    stages = []
    for _ in range(config.cycles):
        for names, group in STAGES:
            x0 = np.array([float(get_param(p, k)) for k in names])

            def loss(x, names=names, group=group, p=p):
                q = p
                for k, v in zip(names, x):
                    q = with_param(q, k, v)
                try:
                    pred = predict_cases(q, first, last, dt=config.dt, measure=config.measure)
                except ModelError:
                    return math.inf
                return float(np.sum((pred[:, group] - observed[:, group]) ** 2))

            lo = [_bounds(k)[0] for k in names]
            hi = [_bounds(k)[1] for k in names]
            res = nelder_mead(loss, x0, lo, hi, scale=config.simplex_scale, ftol_rel=config.ftol_rel,
                              xtol_rel=config.xtol_rel, max_evals=config.max_evals)
            for k, v in zip(names, res.x):
                p = with_param(p, k, v)
            stages.append(StageResult(
                names=names, group=group, start=tuple(x0), x=tuple(float(v) for v in res.x),
                loss=res.fun, evals=res.evals, iterations=res.iterations, converged=res.converged,
                diameter=res.diameter, trace=tuple(res.trace),
            ))

    predicted = predict_cases(p, first, last, dt=config.dt, measure=config.measure)
    r2 = r_squared(observed.sum(axis=1), predicted.sum(axis=1))
    return FitResult(params=p, years=tuple(range(first, last + 1)), observed=observed, predicted=predicted,
                     r2=r2, stages=tuple(stages), measure=config.measure, dt=config.dt)


def holdout_check(result: FitResult, data: CaseSeries, years=HOLDOUT_YEARS) -> dict[int, float]:
    """Relative error ``|predicted - actual| / actual`` of national totals per holdout year."""
    years = tuple(years)
    actual = data.totals(years)
    pred = predict_cases(result.params, min(years), max(years), dt=result.dt, measure=result.measure)
    return {y: float(abs(pt - at) / at) for y, pt, at in zip(years, pred.sum(axis=1), actual)}
