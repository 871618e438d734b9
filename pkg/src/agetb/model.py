"""Parameters, state layout and right-hand side of the 12-equation SEIR system.

State ordering is fixed everywhere as ``(S1, E1, I1, R1, S2, ..., R3)``.
Time is measured in calendar years and every rate is per year.
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from importlib import resources

import numba
import numpy as np

from . import paramfile
from .errors import DomainError, InvalidState, ModelError, UnknownPreset
from .mixing import MixingSpec, _contacts, _foi, _fractions

N_MODES = ("constant", "varying")
PRESETS = ("constant_n", "varying_n")

# Column layout of a state vector.
S, E, I, R = range(4)


@dataclass(frozen=True)
class ModelParams:
    A: float
    rho: float
    omega: float
    mu: tuple[float, float, float]
    theta: tuple[float, float]
    sigma: tuple[float, float, float]
    gamma: tuple[float, float, float]
    d: tuple[float, float, float]
    mixing: MixingSpec
    n_mode: str = "varying"
    n_fixed: tuple[float, float, float] | None = None

    def __post_init__(self):
        for name, width in (("mu", 3), ("theta", 2), ("sigma", 3), ("gamma", 3), ("d", 3)):
            value = tuple(float(v) for v in getattr(self, name))
            if len(value) != width:
                raise DomainError(f"{name} needs {width} entries, got {len(value)}")
            if any(not v >= 0 for v in value):
                raise DomainError(f"{name} must be nonnegative: {value}")
            object.__setattr__(self, name, value)
        for name in ("A", "rho", "omega"):
            value = float(getattr(self, name))
            if not value >= 0:
                raise DomainError(f"{name} must be nonnegative: {value}")
            object.__setattr__(self, name, value)
        if self.rho > 1 or self.omega > 1:
            raise DomainError(f"rho and omega must lie in [0, 1]: rho={self.rho}, omega={self.omega}")
        if self.n_mode not in N_MODES:
            raise DomainError(f"n_mode must be one of {N_MODES}, got {self.n_mode!r}")
        if self.n_fixed is not None:
            object.__setattr__(self, "n_fixed", tuple(float(v) for v in self.n_fixed))
        if self.n_mode == "constant":
            if self.n_fixed is None or len(self.n_fixed) != 3 or any(not v > 0 for v in self.n_fixed):
                raise DomainError("n_mode=constant requires three positive n_fixed group sizes")

    @property
    def beta(self):
        return self.mixing.beta

    @property
    def a(self):
        return self.mixing.a

    @property
    def eps(self):
        return self.mixing.eps

    def to_dict(self) -> dict:
        """Flat mapping using the parameter-file key names."""
        return {
            "A": self.A,
            "rho": self.rho,
            "omega": self.omega,
            "mu": self.mu,
            "theta": self.theta,
            "sigma": self.sigma,
            "gamma": self.gamma,
            "d": self.d,
            "a": self.mixing.a,
            "eps": self.mixing.eps,
            "beta": self.mixing.beta,
            "n_mode": self.n_mode,
            "n_fixed": self.n_fixed,
        }

    @classmethod
    def from_dict(cls, values: dict) -> "ModelParams":
        try:
            mixing = MixingSpec(a=values["a"], eps=values["eps"], beta=values["beta"])
        except ModelError as exc:
            raise DomainError(str(exc)) from None
        n_mode = values.get("n_mode", "varying")
        n_fixed = values.get("n_fixed")
        if n_mode == "constant" and n_fixed is None:
            n_fixed = tuple(initial_state().totals())
        return cls(
            A=values["A"],
            rho=values["rho"],
            omega=values["omega"],
            mu=values["mu"],
            theta=values["theta"],
            sigma=values["sigma"],
            gamma=values["gamma"],
            d=values["d"],
            mixing=mixing,
            n_mode=n_mode,
            n_fixed=n_fixed,
        )


# -- parameter paths ---------------------------------------------------------
#
# A path names one scalar ("omega", "a3", "theta1") or a whole per-group
# vector ("gamma"). Group indices are 1-based.

_PATH_RE = re.compile(r"^([A-Za-z_]+?)(\d?)$")
_VECTOR_FIELDS = ("mu", "theta", "sigma", "gamma", "d", "a", "eps", "beta")
_MIXING_FIELDS = ("a", "eps", "beta")


def _split_path(path: str) -> tuple[str, int | None]:
    m = _PATH_RE.match(path)
    if not m:
        raise DomainError(f"malformed parameter path {path!r}")
    name, idx = m.group(1), m.group(2)
    if name in ("A", "rho", "omega") and not idx:
        return name, None
    if name not in _VECTOR_FIELDS:
        raise DomainError(f"unknown parameter {path!r}")
    if not idx:
        return name, None
    k = int(idx) - 1
    width = 2 if name == "theta" else 3
    if not 0 <= k < width:
        raise DomainError(f"group index out of range in {path!r}")
    return name, k


def get_param(p: ModelParams, path: str):
    name, k = _split_path(path)
    value = getattr(p.mixing if name in _MIXING_FIELDS else p, name)
    return value if k is None else value[k]


def with_param(p: ModelParams, path: str, value) -> ModelParams:
    """Copy of ``p`` with one parameter (or a whole per-group vector) replaced."""
    name, k = _split_path(path)
    if name in ("A", "rho", "omega"):
        return dataclasses.replace(p, **{name: float(value)})
    holder = p.mixing if name in _MIXING_FIELDS else p
    current = list(getattr(holder, name))
    if k is None:
        if np.ndim(value) == 0:
            current = [float(value)] * len(current)
        else:
            current = [float(v) for v in value]
    else:
        current[k] = float(value)
    try:
        if name in _MIXING_FIELDS:
            return dataclasses.replace(p, mixing=dataclasses.replace(p.mixing, **{name: tuple(current)}))
        return dataclasses.replace(p, **{name: tuple(current)})
    except ModelError as exc:
        raise DomainError(str(exc)) from None


# -- state -------------------------------------------------------------------


@dataclass(frozen=True)
class StateVec:
    """Compartment counts; ``values`` has the 12-entry interleaved layout."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(12)
        if not np.all(np.isfinite(v)):
            raise InvalidState("state contains non-finite entries")
        if np.any(v < 0):
            raise InvalidState("state entries must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_groups(cls, s, e, i, r) -> "StateVec":
        return cls(np.column_stack([s, e, i, r]).reshape(12))

    def __eq__(self, other):
        return isinstance(other, StateVec) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def grid(self) -> np.ndarray:
        """3x4 view: one row per group, columns S, E, I, R."""
        return self.values.reshape(3, 4)

    @property
    def s(self):
        return self.grid()[:, S]

    @property
    def e(self):
        return self.grid()[:, E]

    @property
    def i(self):
        return self.grid()[:, I]

    @property
    def r(self):
        return self.grid()[:, R]

    def totals(self) -> np.ndarray:
        return self.grid().sum(axis=1)


def initial_state() -> StateVec:
    """Compartments on 2005-01-01.

    S comes from the 2005 age-group proportions and I from the 2005 case
    counts; E and R are 12.1% and 80% of the 2004 counts per group.
    """
    return StateVec.from_groups(
        s=(264991621, 940454335, 99961110),
        e=(2934, 83257, 31212),
        i=(26048, 881944, 351316),
        r=(19397, 550464, 206362),
    )


def preset(name: str) -> ModelParams:
    """One of the two published parameter sets, ``constant_n`` or ``varying_n``."""
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {PRESETS}")
    text = resources.files("agetb").joinpath(f"data/{name}.params").read_text()
    return ModelParams.from_dict(paramfile.parse(text))


# -- right-hand side ---------------------------------------------------------


def pack(p: ModelParams):
    """Flatten ``p`` into the argument tuple expected by the numba kernels."""
    nfix = np.asarray(p.n_fixed if p.n_fixed is not None else (1.0, 1.0, 1.0), dtype=float)
    return (
        float(p.A),
        float(p.rho * p.omega),
        np.asarray(p.mu, dtype=float),
        np.array([p.theta[0], p.theta[1], 0.0]),
        np.asarray(p.sigma, dtype=float),
        np.asarray(p.gamma, dtype=float),
        np.asarray(p.d, dtype=float),
        np.asarray(p.mixing.a, dtype=float),
        np.asarray(p.mixing.eps, dtype=float),
        np.asarray(p.mixing.beta, dtype=float),
        p.n_mode == "constant",
        nfix,
    )


@numba.njit(cache=True)
def _derivs(y, births, vacc, mu, theta, sigma, gamma, d, a, eps, beta, fixed_n, nfix):
    # theta[2] is zero: the oldest group has no onward aging.
    out = np.empty(12)
    if fixed_n:
        n = nfix
    else:
        n = np.empty(3)
        for g in range(3):
            n[g] = y[4 * g] + y[4 * g + 1] + y[4 * g + 2] + y[4 * g + 3]
    for g in range(3):
        if not n[g] > 0.0:
            out[:] = np.nan
            return out
    f = _fractions(a, eps, n)
    c = _contacts(eps, f)
    inf = np.empty(3)
    for g in range(3):
        inf[g] = y[4 * g + 2]
    lam = _foi(a, beta, c, inf, n)
    for g in range(3):
        s_ = y[4 * g]
        e_ = y[4 * g + 1]
        i_ = y[4 * g + 2]
        r_ = y[4 * g + 3]
        if g == 0:
            in_s = (1.0 - vacc) * births
            in_e = 0.0
            in_i = 0.0
            in_r = vacc * births
        else:
            t_in = theta[g - 1]
            in_s = t_in * y[4 * (g - 1)]
            in_e = t_in * y[4 * (g - 1) + 1]
            in_i = t_in * y[4 * (g - 1) + 2]
            in_r = t_in * y[4 * (g - 1) + 3]
        out_rate = mu[g] + theta[g]
        out[4 * g] = in_s - (lam[g] + out_rate) * s_
        out[4 * g + 1] = lam[g] * s_ + in_e - (sigma[g] + out_rate) * e_
        out[4 * g + 2] = sigma[g] * e_ + in_i - (gamma[g] + d[g] + out_rate) * i_
        out[4 * g + 3] = gamma[g] * i_ + in_r - out_rate * r_
    return out


def group_sizes(p: ModelParams, y) -> np.ndarray:
    """Group sizes that enter the force of infection for state ``y``."""
    if p.n_mode == "constant":
        return np.asarray(p.n_fixed, dtype=float)
    return np.asarray(y, dtype=float).reshape(3, 4).sum(axis=1)


def rhs(p: ModelParams, y, t: float = 0.0) -> np.ndarray:
    """Time derivative of the 12 compartments (persons/year).

    ``y`` may be a :class:`StateVec` or any 12-element array in state order.
    The system is autonomous, ``t`` is accepted only for integrator symmetry.
    """
    arr = y.values if isinstance(y, StateVec) else np.asarray(y, dtype=float).reshape(12)
    n = group_sizes(p, arr)
    if np.any(n <= 0):
        raise InvalidState(f"group sizes must be positive: n={n}")
    return _derivs(arr, *pack(p))
