"""Preferential mixing between the three age groups.

Each group reserves a share ``eps[i]`` of its contacts for its own members and
spreads the rest over the whole population in proportion to every group's
unreserved contact supply ``(1 - eps[j]) * a[j] * n[j]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import DegenerateMixing, InvalidState, ModelError

NGROUPS = 3


@dataclass(frozen=True)
class MixingSpec:
    """Contact parameters per group.

    a:    mean contacts per person per year
    eps:  fraction of contacts reserved for the own group, in [0, 1]
    beta: infection probability per contact with an infectious person
    """

    a: tuple[float, float, float]
    eps: tuple[float, float, float]
    beta: tuple[float, float, float]

    def __post_init__(self):
        for name in ("a", "eps", "beta"):
            value = tuple(float(v) for v in getattr(self, name))
            if len(value) != NGROUPS:
                raise ModelError(f"{name} needs {NGROUPS} entries, got {len(value)}")
            object.__setattr__(self, name, value)
        if any(not v > 0 for v in self.a):
            raise ModelError(f"contact counts must be positive: a={self.a}")
        if any(not 0.0 <= v <= 1.0 for v in self.eps):
            raise ModelError(f"eps must lie in [0, 1]: eps={self.eps}")
        if any(not 0.0 <= v <= 1.0 for v in self.beta):
            raise ModelError(f"beta must lie in [0, 1]: beta={self.beta}")


# The njit helpers below are shared with the integration kernel so the ODE
# right-hand side and the public functions evaluate identical arithmetic.

@numba.njit(cache=True)
def _fractions(a, eps, n):
    f = np.empty(3)
    total = 0.0
    for k in range(3):
        f[k] = (1.0 - eps[k]) * a[k] * n[k]
        total += f[k]
    if total <= 0.0:
        f[:] = np.nan
        return f
    for k in range(3):
        f[k] /= total
    return f


@numba.njit(cache=True)
def _contacts(eps, f):
    c = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            c[i, j] = (1.0 - eps[i]) * f[j]
        c[i, i] += eps[i]
    return c


@numba.njit(cache=True)
def _foi(a, beta, c, infectious, n):
    lam = np.empty(3)
    for i in range(3):
        s = 0.0
        for j in range(3):
            s += c[i, j] * infectious[j] / n[j]
        lam[i] = a[i] * beta[i] * s
    return lam


def _as3(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.shape != (NGROUPS,):
        raise ModelError(f"{name} must have shape ({NGROUPS},), got {arr.shape}")
    return arr


def mixing_fractions(spec: MixingSpec, n) -> np.ndarray:
    """Share ``f_j`` of the at-large contact pool supplied by each group."""
    n = _as3(n, "n")
    if np.any(n <= 0):
        raise InvalidState(f"group sizes must be positive: n={n}")
    f = _fractions(np.asarray(spec.a), np.asarray(spec.eps), n)
    if not np.all(np.isfinite(f)):
        raise DegenerateMixing("every group is fully preferential (eps=1); mixing fractions undefined")
    return f


def contact_matrix(spec: MixingSpec, f) -> np.ndarray:
    """Row-stochastic matrix ``c[i, j] = eps_i [i == j] + (1 - eps_i) f_j``."""
    f = _as3(f, "f")
    if abs(f.sum() - 1.0) > 1e-12 or np.any(f < 0):
        raise ModelError(f"mixing fractions must be a probability vector: f={f}")
    return _contacts(np.asarray(spec.eps), f)


def force_of_infection(spec: MixingSpec, C, i_counts, n) -> np.ndarray:
    """Per-susceptible infection hazard (1/year) for each group."""
    n = _as3(n, "n")
    i_counts = _as3(i_counts, "i_counts")
    if np.any(n <= 0):
        raise InvalidState(f"group sizes must be positive: n={n}")
    if np.any(i_counts < 0):
        raise InvalidState(f"infectious counts must be nonnegative: I={i_counts}")
    C = np.asarray(C, dtype=float)
    return _foi(np.asarray(spec.a), np.asarray(spec.beta), C, i_counts, n)
