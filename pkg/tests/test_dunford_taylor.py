"""Sinc-quadrature realization of the fractional bilinear form (d = 1)."""

import math

import numpy as np
import pytest

from fraclap import mesh as fm
from fraclap.assembly import assemble_stiffness
from fraclap.dunford_taylor import (DtOperator, SincGrid, default_sinc_size,
                                    sinc_scalar_check, sinc_scalar_target,
                                    solve_dt)


def test_sinc_grid_symmetric():
    g = SincGrid(0.5, 16)
    assert len(g.y) == 33
    assert np.allclose(g.y, -g.y[::-1])
    assert g.k == pytest.approx(0.25)


def test_scalar_check_s_half_target():
    assert sinc_scalar_target(0.5) == pytest.approx(math.pi / 2.0)
    val = sinc_scalar_check(0.5, 256)
    assert abs(val - math.pi / 2.0) < 1e-3


def test_scalar_check_quarter_accuracy():
    err = abs(sinc_scalar_check(0.25, 1024, k=2.0 / 32.0)
              - sinc_scalar_target(0.25))
    assert err < 1e-6


def test_scalar_check_error_collapses_with_n():
    s = 0.5
    e16 = abs(sinc_scalar_check(s, 16) - sinc_scalar_target(s))
    e256 = abs(sinc_scalar_check(s, 256) - sinc_scalar_target(s))
    assert e256 / e16 < 1e-2


def test_scalar_check_exponential_in_sqrt_n():
    s = 0.5
    ns = np.array([16, 32, 64, 128, 256])
    errs = np.array([abs(sinc_scalar_check(s, n) - sinc_scalar_target(s))
                     for n in ns])
    r = np.corrcoef(np.sqrt(ns), np.log(errs))[0, 1]
    assert r < 0  # decaying
    assert r * r >= 0.98


@pytest.fixture(scope="module")
def interval_mesh():
    m = fm.coarse_mesh(fm.interval_domain())
    for _ in range(5):
        m = fm.uniform_refine(m)
    return m


def test_dt_apply_linear_and_zero(interval_mesh):
    op = DtOperator(interval_mesh, 0.5, 16, 4)
    n = op.n_free
    assert np.allclose(op.apply(np.zeros(n)), 0.0)
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal(n), rng.standard_normal(n)
    assert np.allclose(op.apply(u + 2.0 * v),
                       op.apply(u) + 2.0 * op.apply(v), atol=1e-12)


def test_dt_apply_symmetric_positive(interval_mesh):
    op = DtOperator(interval_mesh, 0.5, 24, 5)
    rng = np.random.default_rng(1)
    for _ in range(5):
        u = rng.standard_normal(op.n_free)
        w = rng.standard_normal(op.n_free)
        assert abs(float(w @ op.apply(u)) - float(u @ op.apply(w))) < 1e-10
        assert float(u @ op.apply(u)) > 0.0


def test_dt_form_matches_conforming_on_smooth_field(interval_mesh):
    m = interval_mesh
    A = assemble_stiffness(m, 0.5, None)
    x = m.vertices[A.free, 0]
    u = (1.0 - x * x) ** 2
    exact = float(u @ A.matrix @ u)
    op = DtOperator(m, 0.5, 64, 8, k=2.5 / 8.0)
    approx = float(u @ op.apply(u))
    assert abs(approx - exact) / exact < 0.02


def test_truncation_monotone_in_m(interval_mesh):
    m = interval_mesh
    rng = np.random.default_rng(3)
    x = m.vertices[:, 0]
    n_free = DtOperator(m, 0.5, 16, 2).n_free
    u = rng.standard_normal(n_free)
    outs = [DtOperator(m, 0.5, 16, M).apply(u) for M in (2, 4, 8, 16)]
    diffs = [np.linalg.norm(a - b) for a, b in zip(outs, outs[1:])]
    assert diffs[0] >= diffs[1] >= diffs[2]


def test_default_sinc_size():
    N, M = default_sinc_size(2.0 ** -6)
    L = 6 * math.log(2.0)
    assert N == math.ceil(L * L) and M == math.ceil(L)


def test_solve_dt_center_value(interval_mesh):
    # f = 1, s = 0.5: exact solution sqrt(1 - x^2) has value 1 at 0
    U, op, rep = solve_dt(interval_mesh, 0.5, lambda p: np.ones(len(p)),
                          N=64, M=8)
    assert rep.converged
    free_x = interval_mesh.vertices[:, 0][
        np.flatnonzero(~interval_mesh.boundary_flags)]
    i0 = np.argmin(np.abs(free_x))
    assert abs(U[i0] - 1.0) < 0.05
