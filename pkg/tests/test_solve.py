"""Iterative solvers, preconditioning, and condition estimates."""

import numpy as np
import pytest

from fraclap import mesh as fm
from fraclap.assembly import assemble_stiffness
from fraclap.solve import (BpxPreconditioner, SolverOptions, cg,
                           condition_number, estimate_condition, gauss_seidel)


def _spd(n, cond=100.0, seed=0):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.geomspace(1.0, cond, n)
    return Q @ np.diag(w) @ Q.T


def test_cg_matches_direct_solve():
    A = _spd(40)
    b = np.arange(1.0, 41.0)
    x, rep = cg(A, b, options=SolverOptions(tol=1e-12))
    assert rep.converged
    assert np.allclose(x, np.linalg.solve(A, b), atol=1e-8)


def test_cg_stopping_rule_is_relative_residual():
    A = _spd(30, cond=50.0, seed=1)
    b = np.ones(30)
    tol = 1e-6
    x, rep = cg(A, b, options=SolverOptions(tol=tol))
    res = np.linalg.norm(b - A @ x) / np.linalg.norm(b)
    assert res < tol
    # recorded history matches the rule: last below, penultimate above
    assert rep.residuals[-1] < tol <= rep.residuals[-2]


def test_cg_accepts_callables_and_preconditioner():
    A = _spd(25, seed=2)
    b = np.ones(25)
    Minv = np.linalg.inv(A)
    x, rep = cg(lambda v: A @ v, b, M=lambda r: Minv @ r,
                options=SolverOptions(tol=1e-10))
    assert rep.converged and rep.iterations <= 3
    assert np.allclose(x, np.linalg.solve(A, b), atol=1e-7)


def test_cg_zero_rhs():
    A = _spd(10)
    x, rep = cg(A, np.zeros(10))
    assert rep.converged and rep.iterations == 0
    assert np.all(x == 0)


def test_ritz_condition_estimate_close_to_exact():
    A = _spd(60, cond=500.0, seed=3)
    est = estimate_condition(A, n_iter=120)
    assert abs(est - condition_number(A)) / condition_number(A) < 0.1


def test_gauss_seidel_converges_on_spd():
    A = _spd(20, cond=20.0, seed=4)
    b = np.ones(20)
    x, rep = gauss_seidel(A, b, options=SolverOptions(tol=1e-8, max_iter=5000))
    assert rep.converged
    assert np.linalg.norm(b - A @ x) / np.linalg.norm(b) < 1e-8


@pytest.fixture(scope="module")
def interval_hierarchy():
    m = fm.coarse_mesh(fm.interval_domain())
    meshes = [m]
    for _ in range(4):
        meshes.append(fm.uniform_refine(meshes[-1]))
    return meshes


def test_bpx_is_symmetric_positive(interval_hierarchy):
    s = 0.6
    bpx = BpxPreconditioner(interval_hierarchy, s)
    n = bpx.n
    rng = np.random.default_rng(0)
    B = np.column_stack([bpx.apply(e) for e in np.eye(n)])
    assert np.allclose(B, B.T, atol=1e-12)
    w = np.linalg.eigvalsh(0.5 * (B + B.T))
    assert w.min() > 0


def test_bpx_reduces_cg_iterations(interval_hierarchy):
    s = 0.75
    A = assemble_stiffness(interval_hierarchy[-1], s, None)
    bpx = BpxPreconditioner(interval_hierarchy, s)
    b = np.ones(A.matrix.shape[0])
    _, plain = cg(A.matrix, b, options=SolverOptions(tol=1e-6))
    _, pre = cg(A.matrix, b, M=bpx, options=SolverOptions(tol=1e-6))
    assert pre.converged and plain.converged
    assert pre.iterations <= plain.iterations
