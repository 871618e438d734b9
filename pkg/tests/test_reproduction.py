import dataclasses
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from agetb.errors import DegenerateParams, ModelError, NoConvergence
from agetb.model import StateVec, get_param, initial_state, preset, rhs, with_param
from agetb.reproduction import (audit, disease_free_equilibrium, epsilon_response, inverse_symbols,
                                next_gen_matrices, reproduction_number, spectral_radius,
                                transition_matrix, v_inverse_closed_form)


def random_params(rng, base):
    """Valid parameter draw: every rate scaled by an independent factor in [0.2, 5]."""
    p = base
    for name in ("mu1", "mu2", "mu3", "theta1", "theta2", "sigma1", "sigma2", "sigma3",
                 "gamma1", "gamma2", "gamma3", "d1", "d2", "d3"):
        v = get_param(p, name) or 0.01
        p = with_param(p, name, v * rng.uniform(0.2, 5.0))
    return p


# -- disease-free equilibrium --------------------------------------------------


def test_dfe_chain_substitution(varying):
    dfe = disease_free_equilibrium(varying)
    A, ro = varying.A, varying.rho * varying.omega
    (m1, m2, m3), (t1, t2) = varying.mu, varying.theta
    s1 = (1 - ro) * A / (m1 + t1)
    r1 = ro * A / (m1 + t1)
    s2, r2 = t1 * s1 / (m2 + t2), t1 * r1 / (m2 + t2)
    s3, r3 = t2 * s2 / m3, t2 * r2 / m3
    np.testing.assert_allclose(dfe.s0, [s1, s2, s3], rtol=1e-14)
    np.testing.assert_allclose(dfe.r0, [r1, r2, r3], rtol=1e-14)
    np.testing.assert_allclose(dfe.n0, dfe.s0 + dfe.r0)


def test_dfe_is_stationary(varying):
    dfe = disease_free_equilibrium(varying)
    y = StateVec.from_groups(dfe.s0, np.zeros(3), np.zeros(3), dfe.r0)
    d = rhs(varying, y)
    assert np.max(np.abs(d) / np.maximum(y.values, 1.0)) < 1e-9


def test_dfe_full_vaccination(varying):
    dfe = disease_free_equilibrium(dataclasses.replace(varying, omega=1.0))
    assert dfe.s0[0] == 0.0
    assert dfe.r0[0] == pytest.approx(varying.A / (varying.mu[0] + varying.theta[0]))


def test_dfe_degenerate(varying):
    with pytest.raises(DegenerateParams):
        disease_free_equilibrium(with_param(varying, "mu3", 0.0))


# -- F and V -------------------------------------------------------------------


def test_v_symbols(varying):
    V = transition_matrix(varying)
    assert V[0, 0] == pytest.approx(6.0807, abs=1e-12)
    k = inverse_symbols(varying)
    np.testing.assert_allclose([k[f"A{i}"] for i in range(1, 7)],
                               [6.0807, 0.5792, 6.009, 0.5075, 6.0367, 0.5352], atol=1e-12)
    # V is an M-matrix pattern: positive diagonal, nonpositive elsewhere
    off = V - np.diag(np.diag(V))
    assert np.all(np.diag(V) > 0) and np.all(off <= 0)


def test_f_structure(varying):
    pair = next_gen_matrices(varying)
    assert np.all(pair.F >= 0)
    assert np.all(pair.F[1::2] == 0)  # only E rows receive new infections
    assert np.all(pair.F[:, 0::2] == 0)  # only I columns infect


def test_f_entries_by_hand(varying):
    dfe = disease_free_equilibrium(varying)
    n = dfe.n0
    a, eps, beta = varying.a, varying.eps, varying.beta
    w = [(1 - eps[j]) * a[j] * n[j] for j in range(3)]
    f = [x / sum(w) for x in w]
    F = next_gen_matrices(varying).F
    for i in range(3):
        for j in range(3):
            c = eps[i] * (i == j) + (1 - eps[i]) * f[j]
            assert F[2 * i, 2 * j + 1] == pytest.approx(a[i] * beta[i] * c * dfe.s0[i] / n[j], rel=1e-13)


def test_zero_beta_gives_zero_f(varying):
    q = with_param(varying, "beta", 0.0)
    assert not next_gen_matrices(q).F.any()
    assert reproduction_number(q) == 0.0


def test_no_aging_decouples_groups(varying):
    q = with_param(varying, "theta", 0.0)
    V = transition_matrix(q)
    W = v_inverse_closed_form(q)
    for M in (V, W):
        for g in range(3):
            rows = slice(2 * g, 2 * g + 2)
            outside = np.delete(M[rows], [2 * g, 2 * g + 1], axis=1)
            assert not outside.any()
    A1, A2 = q.mu[0] + q.sigma[0], q.mu[0] + q.d[0] + q.gamma[0]
    np.testing.assert_allclose(W[:2, :2], [[1 / A1, 0], [q.sigma[0] / (A1 * A2), 1 / A2]], rtol=1e-15)


# -- closed-form inverse -------------------------------------------------------


def test_closed_form_inverse_preset(varying):
    V, W = transition_matrix(varying), v_inverse_closed_form(varying)
    np.testing.assert_allclose(V @ W, np.eye(6), rtol=0, atol=1e-10)
    np.testing.assert_allclose(W, np.linalg.solve(V, np.eye(6)), rtol=0, atol=1e-9)


def test_closed_form_inverse_random_draws(varying):
    rng = np.random.default_rng(7)
    for _ in range(100):
        p = random_params(rng, varying)
        V, W = transition_matrix(p), v_inverse_closed_form(p)
        np.testing.assert_allclose(V @ W, np.eye(6), rtol=0, atol=1e-10)
        np.testing.assert_allclose(W, np.linalg.inv(V), rtol=1e-9, atol=1e-12)


def test_inverse_degenerate(varying):
    q = with_param(with_param(varying, "mu3", 0.0), "sigma3", 0.0)  # E3 has no exit
    with pytest.raises(DegenerateParams):
        v_inverse_closed_form(q)


# -- spectral radius -----------------------------------------------------------


def test_power_iteration_against_eigvals(rng):
    for _ in range(20):
        M = rng.uniform(0, 1, (6, 6))
        radius, vec = spectral_radius(M)
        assert radius == pytest.approx(max(abs(np.linalg.eigvals(M))), rel=1e-10)
        np.testing.assert_allclose(M @ vec, radius * vec, rtol=1e-8)


def test_power_iteration_zero_and_negative():
    assert spectral_radius(np.zeros((3, 3)))[0] == 0.0
    with pytest.raises(ModelError):
        spectral_radius(-np.eye(2))


def test_power_iteration_cap():
    # periodic matrix: the max-norm estimate alternates between 2 and 0.5 forever
    with pytest.raises(NoConvergence):
        spectral_radius(np.array([[0.0, 2.0], [0.5, 0.0]]), max_iter=50)


# -- R_v -----------------------------------------------------------------------


def test_rv_values(varying):
    # frozen outputs of this implementation under each group-size convention
    assert reproduction_number(varying, sizes="initial") == pytest.approx(0.803981, abs=1e-6)
    assert reproduction_number(varying, sizes="dfe") == pytest.approx(0.302692, abs=1e-6)
    explicit = reproduction_number(varying, sizes=initial_state().totals())
    assert explicit == reproduction_number(varying, sizes="initial")


def test_rv_against_dense_eigensolver(varying):
    for sizes in ("dfe", "initial"):
        pair = next_gen_matrices(varying, sizes=sizes)
        K = pair.F @ np.linalg.inv(pair.V)
        assert reproduction_number(varying, sizes) == pytest.approx(max(abs(np.linalg.eigvals(K))), rel=1e-10)


def test_rv_rejects_bad_sizes(varying):
    with pytest.raises(ModelError):
        reproduction_number(varying, sizes="median")
    with pytest.raises(ModelError):
        reproduction_number(varying, sizes=[1.0, -1.0, 1.0])


@given(st.floats(0.01, 100.0))
def test_rv_homogeneous_in_beta(factor):
    p = preset("varying_n")
    scaled = with_param(p, "beta", np.array(p.beta) * factor)
    for sizes in ("dfe", "initial"):
        assert reproduction_number(scaled, sizes) == pytest.approx(factor * reproduction_number(p, sizes),
                                                                  rel=1e-10)


def test_rv_doubling_beta_exact(varying):
    doubled = with_param(varying, "beta", np.array(varying.beta) * 2)
    assert reproduction_number(doubled) == pytest.approx(2 * reproduction_number(varying), rel=1e-12)


@pytest.mark.parametrize("name", ["beta1", "beta2", "beta3", "A"])
def test_rv_monotone_in_transmission_and_births(varying, name):
    base = get_param(varying, name)
    for sizes in ("dfe", "initial"):
        values = [reproduction_number(with_param(varying, name, base * f), sizes)
                  for f in np.linspace(0.8, 1.2, 9)]
        assert np.all(np.diff(values) >= -1e-12)


@pytest.mark.parametrize("sizes", ["dfe", "initial"])
def test_rv_monotone_along_each_eps_axis(varying, sizes):
    grid = np.linspace(0.0, 0.95, 20)
    spans = {}
    for g in (1, 2, 3):
        values = [reproduction_number(with_param(varying, f"eps{g}", e), sizes) for e in grid]
        assert np.all(np.diff(values) >= -1e-12), f"eps{g}"
        spans[g] = values[-1] - values[0]
    assert spans[3] > spans[1]


def test_epsilon_response_grid(varying):
    grid = np.linspace(0.0, 0.9, 4)
    out = epsilon_response(varying, (1, 3), grid)
    assert out.shape == (4, 4)
    q = with_param(with_param(varying, "eps1", grid[2]), "eps3", grid[1])
    assert out[2, 1] == reproduction_number(q, "initial")


def test_audit_contents(varying):
    rep = audit(varying, sizes="initial")
    assert rep["R_v"] == reproduction_number(varying, "initial")
    assert max(rep["eigenvector"]) == pytest.approx(1.0)
    assert set(rep["symbols"]) == {f"A{i}" for i in range(1, 7)} | {"B1", "B2", "B3"}
    np.testing.assert_allclose(np.array(rep["V"]) @ np.array(rep["V_inverse"]), np.eye(6), atol=1e-10)
    assert sum(rep["mixing_fractions"]) == pytest.approx(1.0)


def test_rv_runtime(varying):
    reproduction_number(varying)
    t0 = time.perf_counter()
    reproduction_number(varying, sizes="initial")
    assert time.perf_counter() - t0 < 1.0
