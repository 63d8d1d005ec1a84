import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluidcc.analysis import (
    ConvergenceError,
    analyze,
    convergence_check,
    eigenpairs_dense,
    eigenvalues_dense,
    equilibrium_bbr1_deep,
    equilibrium_bbr1_shallow,
    equilibrium_bbr2,
    find_equilibrium,
    jacobian_bbr1,
    jacobian_bbr1_shallow,
    jacobian_bbr2,
    reduced_bbr1_rhs,
    reduced_bbr2_rhs,
    slaved_queue,
)

N_GRID = list(range(1, 33))
D_GRID = [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0]


def sorted_spectrum(values):
    values = np.asarray(values, dtype=complex)
    return values[np.lexsort((values.imag, values.real))]


# ---------------------------------------------------------------- eigensolver

def test_eigen_trivial_examples():
    np.testing.assert_allclose(eigenvalues_dense(np.eye(4)), np.ones(4), atol=1e-14)
    np.testing.assert_allclose(sorted_spectrum(eigenvalues_dense(np.diag([1.0, 2.0, 3.0]))),
                               [1, 2, 3], atol=1e-13)
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    np.testing.assert_allclose(sorted_spectrum(eigenvalues_dense(rot)), [-1j, 1j], atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 24), st.integers(0, 2**32 - 1))
def test_eigen_matches_numpy_oracle(n, seed):
    a = np.random.default_rng(seed).normal(size=(n, n))
    values, vectors, residuals = eigenpairs_dense(a)
    oracle = np.linalg.eigvals(a)
    # match each oracle eigenvalue to its nearest computed one
    for lam in oracle:
        assert np.min(np.abs(values - lam)) < 1e-8 * max(1.0, np.linalg.norm(a))
    assert np.all(residuals < 1e-9)
    for k in range(n):
        v = vectors[:, k]
        assert np.linalg.norm(a @ v - values[k] * v) <= 1e-9 * np.linalg.norm(a)


def test_eigen_sorted_by_real_part():
    values = eigenvalues_dense(np.diag([-3.0, 5.0, 1.0]))
    assert list(values.real) == pytest.approx([5.0, 1.0, -3.0])


def test_eigen_rejects_bad_input():
    with pytest.raises(ValueError):
        eigenvalues_dense(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigenvalues_dense(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        eigenvalues_dense(np.eye(65))


def test_eigen_iteration_cap_reported():
    rng = np.random.default_rng(1)
    with pytest.raises(ConvergenceError):
        eigenvalues_dense(rng.normal(size=(12, 12)), max_iter=1)


# ---------------------------------------------------------------- closed forms

def test_bbr1_deep_examples():
    eq = equilibrium_bbr1_deep(4, 8333.0, 0.01)
    assert eq.q == pytest.approx(83.33)
    one = equilibrium_bbr1_deep(1, 100.0, 1.0)
    assert one.q == 100.0 and one.rate_sum == 100.0
    eq2 = equilibrium_bbr1_deep(2, 100.0, 1.0)
    assert eq2.residual([90.0, 10.0]) < 1e-9
    assert eq2.residual([50.0, 50.0]) < 1e-9
    with pytest.raises(ValueError):
        equilibrium_bbr1_deep(2, 100.0, [1.0, 2.0])


def test_bbr1_shallow_examples():
    assert equilibrium_bbr1_shallow(1, 100.0)[0] == pytest.approx(100.0)
    x = equilibrium_bbr1_shallow(10, 100.0)
    assert x[0] == pytest.approx(500 / 41)
    assert x.sum() == pytest.approx(121.95, abs=5e-3)
    assert (x.sum() - 100.0) / x.sum() == pytest.approx(0.18)
    with pytest.raises(ValueError):
        equilibrium_bbr1_shallow(0, 100.0)


def test_bbr2_equilibrium_examples():
    x, q = equilibrium_bbr2(10, 8333.0, 0.01)
    assert q == pytest.approx(9 / 41 * 83.33) and q == pytest.approx(18.29, abs=5e-3)
    assert equilibrium_bbr2(1, 100.0, 1.0)[1] == 0.0
    _, q_big = equilibrium_bbr2(10_000, 1.0, 1.0)
    assert q_big == pytest.approx(0.25, rel=1e-3)


def test_reduced_rhs_zero_at_equilibria():
    C, d = 100.0, 1.0
    for n in (1, 2, 5, 10):
        eq = equilibrium_bbr1_deep(n, C, d)
        assert np.max(np.abs(reduced_bbr1_rhs(eq.state(np.full(n, C / n)), C, d))) < 1e-9 * C
        x = equilibrium_bbr1_shallow(n, C)
        q = 0.1 * d * C
        assert np.max(np.abs(reduced_bbr1_rhs(np.append(x, q), C, d, buffer=q)[:-1])) < 1e-9 * C
    for n in (2, 5, 10, 32):
        x, q = equilibrium_bbr2(n, C, d)
        assert np.max(np.abs(reduced_bbr2_rhs(np.append(x, q), C, d))) < 1e-9 * C


def test_reduced_rhs_empty_queue_single_agent():
    for rhs in (reduced_bbr1_rhs, reduced_bbr2_rhs):
        dx = rhs(np.array([40.0, 0.0]), 100.0, 1.0)
        assert dx[0] == pytest.approx(0.25 * 40.0)


# ---------------------------------------------------------------- Jacobians

@pytest.mark.parametrize("d,lam", [(0.25, -1.0), (0.5, -1.0), (1.0, -0.5), (2.0, -0.25)])
def test_bbr1_lambda_plus(d, lam):
    jac, eig = jacobian_bbr1(100.0, d)
    assert jac[0, 0] == pytest.approx(-1 / (2 * d) - 1)
    assert eig.real.max() == pytest.approx(lam, abs=1e-12)
    # quadratic-formula oracle: trace and determinant
    tr, det = jac[0, 0] + jac[1, 1], jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    roots = np.sort((tr + np.array([-1, 1]) * math.sqrt(tr * tr - 4 * det)) / 2)
    np.testing.assert_allclose(np.sort(eig.real), roots, atol=1e-12)


def test_bbr1_shallow_spectrum():
    for n in N_GRID:
        _, eig = jacobian_bbr1_shallow(n)
        expected = [-1.0 / (4 * n + 1)] * (n - 1) + [-1.0]
        np.testing.assert_allclose(np.sort(eig.real), np.sort(expected), atol=1e-9)
        assert np.all(np.abs(eig.imag) < 1e-9)


def test_bbr2_jacobian_entries():
    n, d = 10, 0.01
    jac, _ = jacobian_bbr2(n, 8333.0, d)
    k = (4 * n + 1) / (5 * n * n * d)
    assert jac[0, 0] == pytest.approx(-k - 5 / 41)
    assert jac[0, 1] == pytest.approx(-k - 4 / 41)
    assert jac[0, n] == pytest.approx(-k)
    assert list(jac[n]) == [1.0] * n + [0.0]
    assert jac[0, 0] - jac[0, 1] == pytest.approx(-1 / 41)


def test_bbr2_spectrum_grid():
    for n in N_GRID:
        for d in D_GRID:
            _, eig = jacobian_bbr2(n, 100.0, d)
            a = (4 * n + 1) / (5 * n * d)
            expected = [-1.0 / (4 * n + 1)] * (n - 1) + [-1.0, -a]
            np.testing.assert_allclose(np.sort(eig.real), np.sort(expected), atol=1e-9,
                                       rtol=1e-9)
            assert np.all(np.abs(eig.imag) < 1e-9)


@pytest.mark.parametrize("n", [2, 10, 32])
def test_bbr2_contains_closed_form_eigenvalues(n):
    _, eig = jacobian_bbr2(n, 8333.0, 0.01)
    assert np.min(np.abs(eig + 1.0)) < 1e-9
    assert np.sum(np.abs(eig + 1.0 / (4 * n + 1)) < 1e-9) == n - 1


# ---------------------------------------------------------------- analyze reports

def test_analyze_examples():
    rep = analyze("bbr1-shallow", 10, 100.0, 1.0)
    assert rep.x_btl[0] == pytest.approx(12.1951, abs=1e-4) and rep.stable
    assert analyze("bbr1-deep", 1, 100.0, 1.0).lambda_max == pytest.approx(-0.5)
    rep = analyze("bbr2", 1, 100.0, 1.0)
    assert rep.q == 0.0 and rep.lambda_max == pytest.approx(-1.0)
    assert rep.residuals["estimate"] > 0  # reported, not zeroed
    with pytest.raises(ValueError):
        analyze("reno", 2, 100.0, 1.0)
    with pytest.raises(ValueError):
        analyze("bbr2", 2, -1.0, 1.0)


def test_analyze_report_serializes():
    d = analyze("bbr2", 3, 100.0, 0.5).to_dict()
    assert d["stable"] is True
    assert len(d["eigenvalues"]) == 4
    assert d["closed_form"]["q"] == pytest.approx(2 / 13 * 50.0)


# ---------------------------------------------------------------- convergence

def test_convergence_bbr1_shallow():
    n, C, d = 5, 100.0, 1.0
    rng = np.random.default_rng(5)
    x_eq = 5 * C / (4 * n + 1)
    q = 0.1 * d * C
    x0 = rng.uniform(0.1 * C, C, n)
    rep = convergence_check(lambda s: reduced_bbr1_rhs(s, C, d, buffer=q),
                            np.append(x0, q), 300.0, step=1e-2,
                            reference=np.append(np.full(n, x_eq), q), sample_interval=1.0)
    assert not rep.diverged
    assert rep.final_distance < 1e-3 * C


def test_convergence_bbr1_deep_keeps_skew():
    C, d = 100.0, 1.0
    for q0, keeps in ((2.0 * d * C, True), (0.3 * d * C, False)):
        x0 = np.array([0.8, 0.2]) * (1.3 * C if keeps else 0.9 * C)
        rep = convergence_check(lambda s: reduced_bbr1_rhs(s, C, d), np.append(x0, q0), 60.0,
                                sample_interval=1.0)
        x, q = rep.final_state[:-1], rep.final_state[-1]
        assert x.sum() == pytest.approx(C, rel=1e-2)
        assert q == pytest.approx(d * C, rel=1e-2)
        if keeps:
            # above dC every flow is window limited by the same factor: split is frozen
            assert x[0] / x.sum() == pytest.approx(0.8, rel=1e-9)
        else:
            # the probing transient mixes the split, but nothing drives it to fairness
            assert 0.55 < x[0] / x.sum() < 0.8


def test_convergence_reports_divergence():
    rep = convergence_check(lambda s: s.copy(), np.array([1.0, 1.0]), 100.0, step=1e-2,
                            blowup=1e3)
    assert rep.diverged and rep.message


def test_convergence_rejects_non_positive_start():
    with pytest.raises(ValueError):
        convergence_check(lambda s: -s, np.array([0.0, 1.0]), 1.0)


@pytest.mark.parametrize("seed", range(4))
def test_bbr2_local_basin(seed):
    # within 20 % of equilibrium the distance shrinks after a short transient
    n, C, d = 3, 100.0, 1.0
    x_eq, q_eq = equilibrium_bbr2(n, C, d)
    ref = np.append(x_eq, q_eq)
    rng = np.random.default_rng(seed)
    start = ref * (1 + rng.uniform(-0.2, 0.2, n + 1))
    rep = convergence_check(lambda s: reduced_bbr2_rhs(s, C, d), start, 150.0, step=1e-2,
                            reference=ref, sample_interval=0.5)
    tail = rep.distance[rep.t >= 10.0]
    assert np.all(np.diff(tail) <= 1e-9 * C)
    assert rep.final_distance < 0.01 * rep.distance[0]


# ---------------------------------------------------------------- fixed points

def test_slaved_queue_matches_closed_form():
    n, C, d = 10, 100.0, 1.0
    x, q = equilibrium_bbr2(n, C, d)
    assert slaved_queue(x, C, d, 1.0) == pytest.approx(q, rel=1e-12)
    assert slaved_queue([10.0], C, d, 1.0) == 0.0


def test_find_equilibrium_equal_delays_reaches_fair_point():
    n, C, d = 4, 100.0, 1.0
    res = find_equilibrium("bbr2", [10.0, 20.0, 30.0, 40.0], C, d)
    assert res.converged and res.residual <= 1e-10
    x_eq, q_eq = equilibrium_bbr2(n, C, d)
    np.testing.assert_allclose(res.x_btl, x_eq, rtol=1e-8)
    assert res.q == pytest.approx(q_eq, rel=1e-8)


def test_find_equilibrium_heterogeneous_delays():
    C, d = 100.0, np.array([0.5, 1.0, 1.5])
    res = find_equilibrium("bbr2", [30.0, 30.0, 30.0], C, d)
    assert res.converged
    rhs = reduced_bbr2_rhs(np.append(res.x_btl, res.q), C, d)
    assert np.max(np.abs(rhs[:-1])) <= 1e-10 * C
    assert abs(rhs[-1]) <= 1e-9 * C


def test_find_equilibrium_validation():
    with pytest.raises(ValueError):
        find_equilibrium("cubic", [1.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        find_equilibrium("bbr1", [1.0], 1.0, 1.0, damping=0.0)
    with pytest.raises(ValueError):
        find_equilibrium("bbr1", [0.0], 1.0, 1.0)
