"""Disease-free equilibrium, next-generation matrices and R_v.

The infected subsystem is ordered ``(E1, I1, E2, I2, E3, I3)``. ``F`` holds the
new-infection terms, ``V`` the transitions out of (and between) infected
compartments, and ``R_v`` is the spectral radius of ``F V^-1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateParams, ModelError, NoConvergence
from .mixing import contact_matrix, mixing_fractions
from .model import ModelParams, initial_state, with_param

SIZE_MODES = ("dfe", "initial")


@dataclass(frozen=True)
class DfeState:
    s0: np.ndarray
    r0: np.ndarray

    @property
    def n0(self) -> np.ndarray:
        return self.s0 + self.r0


@dataclass(frozen=True)
class NgmPair:
    F: np.ndarray
    V: np.ndarray


def disease_free_equilibrium(p: ModelParams) -> DfeState:
    mu1, mu2, mu3 = p.mu
    th1, th2 = p.theta
    out1, out2, out3 = mu1 + th1, mu2 + th2, mu3
    if min(out1, out2, out3) <= 0:
        raise DegenerateParams(f"zero exit rate from an age group (mu+theta = {out1}, {out2}, {out3})")
    vacc = p.rho * p.omega
    s1 = (1 - vacc) * p.A / out1
    r1 = vacc * p.A / out1
    s2 = th1 * s1 / out2
    r2 = th1 * r1 / out2
    s3 = th2 * s2 / out3
    r3 = th2 * r2 / out3
    s0, r0 = np.array([s1, s2, s3]), np.array([r1, r2, r3])
    with np.errstate(over="ignore"):
        n0 = s0 + r0
    if not np.all(np.isfinite(n0)):
        raise DegenerateParams("disease-free group sizes overflow; an exit rate is too small")
    return DfeState(s0=s0, r0=r0)


def exit_rates(p: ModelParams) -> np.ndarray:
    """Diagonal of V: total exit rates A1..A6 of E1, I1, E2, I2, E3, I3."""
    mu, th, sg, gm, d = p.mu, p.theta, p.sigma, p.gamma, p.d
    return np.array([
        mu[0] + sg[0] + th[0],
        mu[0] + d[0] + gm[0] + th[0],
        mu[1] + sg[1] + th[1],
        mu[1] + d[1] + gm[1] + th[1],
        mu[2] + sg[2],
        mu[2] + d[2] + gm[2],
    ])


def transition_matrix(p: ModelParams) -> np.ndarray:
    V = np.diag(exit_rates(p))
    sg, th = p.sigma, p.theta
    V[1, 0] = -sg[0]
    V[2, 0] = -th[0]
    V[3, 1] = -th[0]
    V[3, 2] = -sg[1]
    V[4, 2] = -th[1]
    V[5, 3] = -th[1]
    V[5, 4] = -sg[2]
    return V


def _sizes(p: ModelParams, dfe: DfeState, sizes) -> np.ndarray:
    if isinstance(sizes, str):
        if sizes == "dfe":
            return dfe.n0
        if sizes == "initial":
            return initial_state().totals()
        raise ModelError(f"sizes must be one of {SIZE_MODES} or an array, got {sizes!r}")
    n = np.asarray(sizes, dtype=float)
    if n.shape != (3,) or np.any(n <= 0):
        raise ModelError(f"explicit group sizes must be 3 positive values, got {sizes!r}")
    return n


def next_gen_matrices(p: ModelParams, dfe: DfeState | None = None, sizes="dfe") -> NgmPair:
    """F and V at the disease-free equilibrium.

    ``sizes`` picks the group sizes N_j used in the force of infection and in
    the mixing fractions: ``"dfe"`` (S0 + R0), ``"initial"`` (2005 totals) or
    an explicit 3-vector. Susceptibles always come from the equilibrium.
    """
    dfe = disease_free_equilibrium(p) if dfe is None else dfe
    n = _sizes(p, dfe, sizes)
    c = contact_matrix(p.mixing, mixing_fractions(p.mixing, n))
    a, beta = np.asarray(p.a), np.asarray(p.beta)
    F = np.zeros((6, 6))
    for i in range(3):
        for j in range(3):
            F[2 * i, 2 * j + 1] = a[i] * beta[i] * c[i, j] * dfe.s0[i] / n[j]
    return NgmPair(F=F, V=transition_matrix(p))


def inverse_symbols(p: ModelParams) -> dict[str, float]:
    """A1..A6 and the path sums B1..B3 appearing in the closed-form V^-1."""
    A1, A2, A3, A4, A5, A6 = exit_rates(p)
    s1, s2, s3 = p.sigma
    t1, t2 = p.theta
    return {
        "A1": A1, "A2": A2, "A3": A3, "A4": A4, "A5": A5, "A6": A6,
        "B1": s1 * t1 / (A1 * A2 * A4) + s2 * t1 / (A1 * A3 * A4),
        "B2": (s1 * t1 * t2 / (A1 * A2 * A4 * A6)
               + s2 * t1 * t2 / (A1 * A3 * A4 * A6)
               + s3 * t1 * t2 / (A1 * A3 * A5 * A6)),
        "B3": s2 * t2 / (A3 * A4 * A6) + s3 * t2 / (A3 * A5 * A6),
    }


def v_inverse_closed_form(p: ModelParams) -> np.ndarray:
    """Lower-triangular V^-1 written out entry by entry.

    Each entry sums, over every route from the column compartment to the row
    compartment, the product of transition rates divided by the exit rates
    of the compartments visited.
    """
    if np.any(exit_rates(p) <= 0):
        raise DegenerateParams("every infected compartment needs a positive exit rate")
    k = inverse_symbols(p)
    A1, A2, A3, A4, A5, A6 = (k[f"A{i}"] for i in range(1, 7))
    s1, s2, s3 = p.sigma
    t1, t2 = p.theta
    W = np.zeros((6, 6))
    W[0, 0] = 1 / A1
    W[1, 0] = s1 / (A1 * A2)
    W[1, 1] = 1 / A2
    W[2, 0] = t1 / (A1 * A3)
    W[2, 2] = 1 / A3
    W[3, 0] = k["B1"]
    W[3, 1] = t1 / (A2 * A4)
    W[3, 2] = s2 / (A3 * A4)
    W[3, 3] = 1 / A4
    W[4, 0] = t1 * t2 / (A1 * A3 * A5)
    W[4, 2] = t2 / (A3 * A5)
    W[4, 4] = 1 / A5
    W[5, 0] = k["B2"]
    W[5, 1] = t1 * t2 / (A2 * A4 * A6)
    W[5, 2] = k["B3"]
    W[5, 3] = t2 / (A4 * A6)
    W[5, 4] = s3 / (A5 * A6)
    W[5, 5] = 1 / A6
    return W


def spectral_radius(M: np.ndarray, tol: float = 1e-12, max_iter: int = 100_000):
    """Perron root of a nonnegative matrix by power iteration.

    Starts from the all-ones vector. Returns ``(radius, eigenvector)`` with the
    eigenvector scaled to unit max-norm.
    """
    M = np.asarray(M, dtype=float)
    if np.any(M < 0):
        raise ModelError("power iteration here requires a nonnegative matrix")
    x = np.ones(M.shape[0])
    estimate = 0.0
    for _ in range(max_iter):
        y = M @ x
        norm = np.max(np.abs(y))
        if norm == 0.0:
            return 0.0, x
        y /= norm
        if abs(norm - estimate) <= tol * norm:
            return float(norm), y
        estimate = norm
        x = y
    raise NoConvergence(f"power iteration did not converge in {max_iter} iterations")


def next_generation_operator(p: ModelParams, sizes="dfe") -> np.ndarray:
    pair = next_gen_matrices(p, sizes=sizes)
    return pair.F @ v_inverse_closed_form(p)


def reproduction_number(p: ModelParams, sizes="dfe") -> float:
    """R_v, the spectral radius of F V^-1."""
    radius, _ = spectral_radius(next_generation_operator(p, sizes=sizes))
    return radius


def audit(p: ModelParams, sizes="dfe") -> dict:
    """Every intermediate quantity of the R_v calculation, for reporting."""
    dfe = disease_free_equilibrium(p)
    pair = next_gen_matrices(p, dfe, sizes=sizes)
    Vinv = v_inverse_closed_form(p)
    K = pair.F @ Vinv
    radius, vec = spectral_radius(K)
    n = _sizes(p, dfe, sizes)
    return {
        "sizes": sizes if isinstance(sizes, str) else "explicit",
        "R_v": radius,
        "eigenvector": vec.tolist(),
        "S0": dfe.s0.tolist(),
        "R0": dfe.r0.tolist(),
        "N_used": n.tolist(),
        "mixing_fractions": mixing_fractions(p.mixing, n).tolist(),
        "symbols": inverse_symbols(p),
        "F": pair.F.tolist(),
        "V": pair.V.tolist(),
        "V_inverse": Vinv.tolist(),
        "FV_inverse": K.tolist(),
    }


def epsilon_response(p: ModelParams, axes: tuple[int, int], grid, sizes="initial") -> np.ndarray:
    """R_v over a 2-D grid of two preferential-contact shares.

    ``axes`` are 1-based group numbers; the third share stays at its value
    in ``p``. Entry ``[i, j]`` uses ``grid[i]`` for the first axis and
    ``grid[j]`` for the second.
    """
    g1, g2 = axes
    grid = np.asarray(grid, dtype=float)
    out = np.empty((len(grid), len(grid)))
    for i, x in enumerate(grid):
        q = with_param(p, f"eps{g1}", x)
        for j, y in enumerate(grid):
            out[i, j] = reproduction_number(with_param(q, f"eps{g2}", y), sizes=sizes)
    return out
