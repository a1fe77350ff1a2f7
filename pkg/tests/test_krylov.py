import csv

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from dirac_st import bench, krylov
from dirac_st.krylov import BreakdownError, bicgstab, dense_solve, gmres, solve, sparse_direct


def well_conditioned(n, seed):
    r = np.random.default_rng(seed)
    M = (r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))) / np.sqrt(2 * n)
    A = sp.csr_matrix(np.eye(n) * (2 + 1j) + 0.5 * M)
    b = r.standard_normal(n) + 1j * r.standard_normal(n)
    return A, b


@pytest.fixture(scope="module")
def central_16x8():
    _, _, s = bench.build_experiment(bench.ExperimentConfig(scheme="central", nx=16, nt=8))
    return s


def test_bicgstab_identity():
    b = np.array([1.0, -2.0, 3j])
    rep = bicgstab((sp.identity(3, format="csr"), b))
    np.testing.assert_allclose(rep.x, b)
    assert rep.iterations <= 0.5
    assert rep.converged


def test_bicgstab_diagonal():
    rep = bicgstab((sp.diags([2.0, 4.0]).tocsr(), np.array([2.0, 4.0])), tol=1e-14)
    np.testing.assert_allclose(rep.x, [1, 1], atol=1e-12)


@given(st.integers(5, 60), st.integers(0, 2**31), st.sampled_from(["residual", "random"]))
def test_bicgstab_matches_dense_oracle(n, seed, shadow):
    A, b = well_conditioned(n, seed)
    rep = bicgstab((A, b), tol=1e-10, shadow=shadow)
    ref = dense_solve((A, b))
    assert rep.converged
    assert np.linalg.norm(rep.x - ref) <= 1e-6 * np.linalg.norm(ref)


@pytest.mark.xfail(strict=True, raises=BreakdownError, reason="symmetric spectrum: unpreconditioned BiCGSTAB breaks down")
def test_bicgstab_central_16x8_matches_dense(central_16x8):
    rep = bicgstab(central_16x8, tol=1e-10, shadow="random", max_iter=20 * central_16x8.n)
    ref = dense_solve(central_16x8)
    assert np.linalg.norm(rep.x - ref) < 1e-8 * np.linalg.norm(ref)


def test_bicgstab_structural_breakdown_is_reported(central_16x8):
    # equal-component data makes b^H A b vanish, so the classic shadow fails at once
    with pytest.raises(BreakdownError) as info:
        bicgstab(central_16x8, tol=1e-10, shadow="residual")
    rep = info.value.report
    assert not rep.converged
    assert rep.iterations == 0
    assert rep.residual == pytest.approx(1.0)


def test_bicgstab_iteration_cap():
    A, b = well_conditioned(40, 3)
    rep = bicgstab((A, b), tol=1e-14, max_iter=1)
    assert not rep.converged
    assert rep.iterations == 1
    assert rep.residual > 1e-14


def test_bicgstab_half_step_counts():
    A, b = well_conditioned(30, 5)
    rep = bicgstab((A, b), tol=1e-10)
    assert (2 * rep.iterations) == int(2 * rep.iterations)
    its = [h[0] for h in rep.history]
    assert its == sorted(its)


def test_gmres_identity():
    b = np.arange(1, 5) * (1 - 1j)
    rep = gmres((sp.identity(4, format="csr"), b))
    assert rep.iterations == 1
    np.testing.assert_allclose(rep.x, b)


@given(st.integers(0, 2**31))
def test_gmres_full_restart_n30(seed):
    r = np.random.default_rng(seed)
    n = 30
    A = sp.csr_matrix(r.standard_normal((n, n)) + 1j * r.standard_normal((n, n)) + 4 * np.eye(n))
    b = r.standard_normal(n) + 0j
    rep = gmres((A, b), tol=1e-10, restart=n)
    ref = dense_solve((A, b))
    assert rep.converged
    assert rep.iterations <= n
    assert np.linalg.norm(rep.x - ref) <= 1e-6 * np.linalg.norm(ref)


@given(st.integers(5, 40), st.integers(1, 10), st.integers(0, 2**31))
def test_gmres_cycle_residuals_monotone(n, restart, seed):
    A, b = well_conditioned(n, seed)
    rep = gmres((A, b), tol=1e-12, restart=restart, max_iter=5 * n)
    for cycle in rep.cycles:
        assert np.all(np.diff(cycle) <= 1e-14)


def test_gmres_central_16x8_matches_dense(central_16x8):
    rep = gmres(central_16x8, tol=1e-10, restart=central_16x8.n)
    ref = dense_solve(central_16x8)
    assert rep.converged
    assert np.linalg.norm(rep.x - ref) < 1e-8 * np.linalg.norm(ref)


@pytest.mark.parametrize("method", ["bicgstab", "gmres", "direct"])
def test_zero_rhs(method):
    A, _ = well_conditioned(10, 0)
    rep = solve((A, np.zeros(10)), method)
    assert rep.iterations == 0
    assert not rep.x.any()
    assert rep.converged


@pytest.mark.parametrize("method", ["bicgstab", "gmres", "direct"])
def test_reported_residual_is_recomputed(method):
    A, b = well_conditioned(25, 9)
    rep = solve((A, b), method, tol=1e-8)
    true = np.linalg.norm(b - A @ rep.x) / np.linalg.norm(b)
    assert abs(rep.residual - true) <= 1e-13
    assert rep.converged == (rep.residual <= 1e-8)


def test_invalid_arguments():
    A, b = well_conditioned(4, 0)
    with pytest.raises(ValueError):
        bicgstab((A, b), tol=0)
    with pytest.raises(ValueError):
        gmres((A, b), restart=0)
    with pytest.raises(ValueError):
        gmres((A, b[:3]))
    with pytest.raises(ValueError):
        solve((A, b), "cg")
    with pytest.raises(ValueError):
        bicgstab((A, b), shadow="other")


def test_direct_matches_dense():
    A, b = well_conditioned(50, 4)
    rep = sparse_direct((A, b))
    assert rep.method == "direct"
    np.testing.assert_allclose(rep.x, dense_solve((A, b)), atol=1e-12)


def test_direct_falls_back_on_singular_consistent_system():
    A = sp.csr_matrix(np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 2.0]]))
    b = np.array([2.0, 2.0, 4.0])
    rep = sparse_direct((A, b))
    assert rep.method == "least-squares"
    np.testing.assert_allclose(rep.x, [1, 1, 2], atol=1e-6)
    assert rep.converged


def test_history_csv(tmp_path):
    A, b = well_conditioned(20, 1)
    rep = gmres((A, b), tol=1e-10)
    path = tmp_path / "h.csv"
    krylov.write_history(rep, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["iteration", "residual"]
    assert len(rows) == len(rep.history) + 1
    assert float(rows[-1][1]) == pytest.approx(rep.history[-1][1], rel=1e-6)
