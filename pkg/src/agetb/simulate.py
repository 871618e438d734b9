"""Fixed-step RK4 integration and annual case aggregation.

Simulation time is the calendar year as a float: ``2005.0`` is 2005-01-01,
and calendar year ``Y`` covers ``[Y, Y + 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import InvalidState, NonFiniteState, SpanTooShort, StepTooLarge
from .model import ModelParams, StateVec, _derivs, pack

MAX_DT = 0.05
DEFAULT_DT = 1e-3
START_YEAR = 2005
MEASURES = ("activation", "prevalence")


@dataclass(frozen=True)
class Trajectory:
    """Solution on a uniform grid.

    ``states`` is (n_points, 12) in state order; ``new_case_flux`` is
    (n_points, 3) holding sigma_i * E_i at each grid point.
    """

    times: np.ndarray
    states: np.ndarray
    new_case_flux: np.ndarray
    dt: float
    clamp_count: int = 0

    def __post_init__(self):
        for name in ("times", "states", "new_case_flux"):
            getattr(self, name).setflags(write=False)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    def state_at(self, k: int) -> StateVec:
        return StateVec(self.states[k])

    def index_of(self, t: float) -> int:
        k = int(round((t - self.t0) / self.dt))
        if k < 0 or k >= len(self.times) or abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise SpanTooShort(f"time {t} is not on the trajectory grid [{self.t0}, {self.t1}]")
        return k

    def infectious(self) -> np.ndarray:
        return self.states[:, 2::4]


@dataclass(frozen=True)
class AnnualIncidence:
    year: int
    cases: tuple[float, float, float]
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "cases", tuple(float(c) for c in self.cases))
        object.__setattr__(self, "total", float(sum(self.cases)))


@numba.njit(cache=True)
def _rk4(y0, n_steps, dt, births, vacc, mu, theta, sigma, gamma, d, a, eps, beta, fixed_n, nfix):
    states = np.empty((n_steps + 1, 12))
    states[0] = y0
    y = y0.copy()
    clamps = 0
    for k in range(n_steps):
        k1 = _derivs(y, births, vacc, mu, theta, sigma, gamma, d, a, eps, beta, fixed_n, nfix)
        k2 = _derivs(y + 0.5 * dt * k1, births, vacc, mu, theta, sigma, gamma, d, a, eps, beta, fixed_n, nfix)
        k3 = _derivs(y + 0.5 * dt * k2, births, vacc, mu, theta, sigma, gamma, d, a, eps, beta, fixed_n, nfix)
        k4 = _derivs(y + dt * k3, births, vacc, mu, theta, sigma, gamma, d, a, eps, beta, fixed_n, nfix)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for j in range(12):
            if not np.isfinite(y[j]):
                return states[: k + 1], clamps, k + 1
            if y[j] < 0.0:
                y[j] = 0.0
                clamps += 1
        states[k + 1] = y
    return states, clamps, -1


def integrate(p: ModelParams, y0, t0: float, t1: float, dt: float = DEFAULT_DT) -> Trajectory:
    """Integrate from ``t0`` to ``t1`` with classical RK4 at fixed step ``dt``.

    Negative compartments produced by a step are reset to zero and counted in
    ``Trajectory.clamp_count``.
    """
    if not 0 < dt <= MAX_DT:
        raise StepTooLarge(f"dt must lie in (0, {MAX_DT}], got {dt}")
    if not t1 > t0:
        raise SpanTooShort(f"t1 must exceed t0 (t0={t0}, t1={t1})")
    y = y0.values if isinstance(y0, StateVec) else np.asarray(y0, dtype=float).reshape(12)
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise InvalidState("initial state must be finite and nonnegative")
    n_steps = max(1, int(round((t1 - t0) / dt)))
    packed = pack(p)
    if packed[10] and np.any(packed[11] <= 0):
        raise InvalidState("fixed group sizes must be positive")
    states, clamps, bad_step = _rk4(np.array(y, dtype=float), n_steps, float(dt), *packed)
    if bad_step >= 0:
        raise NonFiniteState(f"state became non-finite at step {bad_step} (t={t0 + bad_step * dt:.6g})")
    times = t0 + dt * np.arange(n_steps + 1)
    flux = states[:, 1::4] * np.asarray(p.sigma)
    return Trajectory(times=times, states=states, new_case_flux=flux, dt=float(dt), clamp_count=int(clamps))


def concatenate(first: Trajectory, second: Trajectory) -> Trajectory:
    """Join two trajectories sharing the boundary point (and step)."""
    if abs(first.dt - second.dt) > 1e-15 or abs(first.t1 - second.t0) > 1e-9:
        raise SpanTooShort("trajectories do not abut on a common grid")
    n = len(first.times) - 1
    times = first.t0 + first.dt * np.arange(n + len(second.times))
    return Trajectory(
        times=times,
        states=np.vstack([first.states[:-1], second.states]),
        new_case_flux=np.vstack([first.new_case_flux[:-1], second.new_case_flux]),
        dt=first.dt,
        clamp_count=first.clamp_count + second.clamp_count,
    )


def _year_flux(traj: Trajectory, year: int) -> np.ndarray:
    lo = traj.index_of(float(year))
    steps = int(round(1.0 / traj.dt))
    hi = lo + steps
    if hi >= len(traj.times):
        raise SpanTooShort(f"trajectory ends at {traj.t1}, year {year} needs data through {year + 1}")
    seg = traj.new_case_flux[lo : hi + 1]
    return traj.dt * (seg[0] / 2 + seg[1:-1].sum(axis=0) + seg[-1] / 2)


def annual_new_cases(traj: Trajectory, first_year: int, last_year: int | None = None,
                     measure: str = "activation") -> list[AnnualIncidence]:
    """Annual cases per group for ``first_year .. last_year``.

    ``activation`` integrates sigma_i E_i over each calendar year with the
    trapezoidal rule; aging transfers of active cases are not counted.
    ``prevalence`` reports the infectious compartments at the start of each
    year instead.
    """
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")
    steps = 1.0 / traj.dt
    if abs(steps - round(steps)) > 1e-6:
        raise SpanTooShort(f"step {traj.dt} does not divide a year")
    if last_year is None:
        last_year = math.floor(traj.t1 + 1e-9) - (1 if measure == "activation" else 0)
    if last_year < first_year:
        raise SpanTooShort(f"trajectory [{traj.t0}, {traj.t1}] does not cover a full year from {first_year}")
    out = []
    for year in range(first_year, last_year + 1):
        if measure == "activation":
            cases = _year_flux(traj, year)
        else:
            cases = traj.infectious()[traj.index_of(float(year))]
        out.append(AnnualIncidence(year=year, cases=tuple(cases)))
    return out


def case_matrix(series: list[AnnualIncidence]) -> np.ndarray:
    """(n_years, 3) array of per-group cases."""
    return np.array([row.cases for row in series])
