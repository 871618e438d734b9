"""Latin hypercube sampling and partial rank correlation of R_v."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ModelError, RankDegenerate, TooManyFailures
from .model import ModelParams, get_param, with_param
from .reproduction import reproduction_number

SAMPLED = (
    "A",
    "beta1", "beta2", "beta3",
    "gamma1", "gamma2", "gamma3",
    "sigma1", "sigma2", "sigma3",
    "omega",
    "mu1", "mu2", "mu3",
    "theta1", "theta2",
    "a1", "a2", "a3",
    "eps1", "eps2", "eps3",
)
DEFAULT_SEED = 20220101
DEFAULT_SAMPLES = 1000


@dataclass(frozen=True)
class ParamRange:
    name: str
    low: float
    high: float

    def __post_init__(self):
        if not self.low < self.high:
            raise ModelError(f"empty range for {self.name}: [{self.low}, {self.high}]")
        if self.name.startswith(("eps", "omega", "rho", "beta")) and (self.low < 0 or self.high > 1):
            raise ModelError(f"{self.name} range must stay inside [0, 1]")


@dataclass(frozen=True)
class PrccResult:
    names: tuple[str, ...]
    coefficients: np.ndarray
    n_samples: int
    seed: int | None
    n_failed: int = 0

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.names, self.coefficients)}

    def ranked(self) -> list[tuple[str, float]]:
        """(name, coefficient) sorted by decreasing magnitude."""
        order = sorted(range(len(self.names)), key=lambda i: (-abs(self.coefficients[i]), self.names[i]))
        return [(self.names[i], float(self.coefficients[i])) for i in order]


def default_ranges(base: ModelParams, rel: float = 0.2, eps_cap: float = 0.95,
                   names=SAMPLED) -> list[ParamRange]:
    """Symmetric +-``rel`` ranges around ``base``; eps capped at ``eps_cap``, omega at 1."""
    out = []
    for name in names:
        v = float(get_param(base, name))
        lo, hi = v * (1 - rel), v * (1 + rel)
        if name.startswith("eps"):
            hi = min(hi, eps_cap)
        elif name == "omega":
            hi = min(hi, 1.0)
        out.append(ParamRange(name, lo, hi))
    return out


def lhs_sample(ranges, n: int, seed: int | None = None) -> np.ndarray:
    """``n x k`` Latin hypercube design.

    Every column places exactly one point, uniformly at random, inside each
    of ``n`` equal-width strata of its range; strata order is a random
    permutation per column.
    """
    if n < 2:
        raise ModelError("need at least two samples")
    rng = np.random.default_rng(seed)
    k = len(ranges)
    unit = np.empty((n, k))
    for j in range(k):
        unit[:, j] = (rng.permutation(n) + rng.random(n)) / n
    lows = np.array([r.low for r in ranges])
    highs = np.array([r.high for r in ranges])
    return lows + unit * (highs - lows)


def _residuals(target: np.ndarray, design: np.ndarray) -> np.ndarray:
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return target - design @ coef


def prcc(samples, outputs, names=None, seed=None) -> PrccResult:
    """Partial rank correlation of each sampled column with ``outputs``.

    Ranks use average-tie handling. For column ``j`` both its ranks and the
    output ranks are regressed on the ranks of all other columns (plus an
    intercept); the coefficient is the correlation of the two residuals.
    """
    X = np.asarray(samples, dtype=float)
    y = np.asarray(outputs, dtype=float)
    n, k = X.shape
    if y.shape != (n,):
        raise ModelError(f"outputs must have length {n}")
    if n <= k + 2:
        raise ModelError(f"need more than k+2={k + 2} samples, got {n}")
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(X)):
        raise ModelError("samples and outputs must be finite")
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(k))
    rx = np.column_stack([rankdata(X[:, j]) for j in range(k)])
    ry = rankdata(y)
    for j in range(k):
        if np.ptp(rx[:, j]) == 0:
            raise RankDegenerate(f"column {names[j]} is constant")
    if np.ptp(ry) == 0:
        raise RankDegenerate("outputs are constant")
    full = np.column_stack([np.ones(n), rx])
    if np.linalg.matrix_rank(full) < k + 1:
        raise RankDegenerate("sample ranks are collinear; a parameter is duplicated or determined by others")
    coeffs = np.empty(k)
    for j in range(k):
        design = np.delete(full, j + 1, axis=1)
        ex = _residuals(rx[:, j], design)
        ey = _residuals(ry, design)
        denom = np.sqrt((ex @ ex) * (ey @ ey))
        coeffs[j] = 0.0 if denom == 0 else float(np.clip((ex @ ey) / denom, -1.0, 1.0))
    return PrccResult(names=names, coefficients=coeffs, n_samples=n, seed=seed)


def sensitivity_run(base: ModelParams, ranges=None, n: int = DEFAULT_SAMPLES,
                    seed: int | None = DEFAULT_SEED, sizes="initial",
                    max_failure_rate: float = 0.01) -> PrccResult:
    """Sample parameters, evaluate R_v per row and return the PRCC table.

    Rows whose R_v evaluation fails are dropped and counted.
    """
    ranges = default_ranges(base) if ranges is None else list(ranges)
    names = [r.name for r in ranges]
    X = lhs_sample(ranges, n, seed)
    values = np.full(n, np.nan)
    for row in range(n):
        p = base
        try:
            for name, v in zip(names, X[row]):
                p = with_param(p, name, v)
            values[row] = reproduction_number(p, sizes=sizes)
        except ModelError:
            continue
    ok = np.isfinite(values)
    failed = int(n - ok.sum())
    if failed > max_failure_rate * n:
        raise TooManyFailures(f"{failed} of {n} samples failed")
    result = prcc(X[ok], values[ok], names=names, seed=seed)
    return PrccResult(names=result.names, coefficients=result.coefficients,
                      n_samples=int(ok.sum()), seed=seed, n_failed=failed)
