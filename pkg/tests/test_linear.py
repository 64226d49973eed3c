"""Linear Dirichlet solver and the closed-form reference solution."""

import math

import numpy as np
import pytest
from scipy import integrate

from fraclap import mesh as fm
from fraclap.linear import (GetoorSolution, RateTable, convergence_study,
                            energy_error_exact, solve_dirichlet)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_getoor_pairing_matches_numerical_integral_1d(s):
    g = GetoorSolution(1, s)
    val, _ = integrate.quad(lambda x: g.gamma * (1 - x * x) ** s, -1.0, 1.0,
                            epsabs=1e-13)
    assert abs(val - g.pairing) < 1e-12


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_getoor_pairing_matches_numerical_integral_2d(s):
    g = GetoorSolution(2, s)
    val, _ = integrate.quad(
        lambda r: 2 * math.pi * r * g.gamma * (1 - r * r) ** s, 0.0, 1.0,
        epsabs=1e-13)
    assert abs(val - g.pairing) < 1e-12


def test_getoor_center_value_half():
    g = GetoorSolution(2, 0.5)
    assert abs(float(g(np.zeros((1, 2)))[0]) - 2.0 / math.pi) < 1e-14
    assert float(g(np.array([[2.0, 0.0]]))[0]) == 0.0


def test_energy_error_guard():
    assert energy_error_exact(1.0, np.array([1.0]), np.array([0.75])) == 0.5
    # tiny negative radicand is clipped, larger raises
    assert energy_error_exact(1.0, np.array([1.0]), np.array([1.0 + 1e-14])) == 0.0
    with pytest.raises(ValueError):
        energy_error_exact(1.0, np.array([1.0]), np.array([1.1]))


def test_rate_table_fit_and_csv(tmp_path):
    t = RateTable()
    for lev in range(1, 6):
        h = 2.0 ** -lev
        t.add(lev, h, 2 ** lev, 3.0 * h ** 0.5)
    assert abs(t.fitted_rate() - 0.5) < 1e-12
    assert abs(t.rows[-1][-1] - 0.5) < 1e-12
    path = tmp_path / "rates.csv"
    t.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "level,h,N,error,rate"
    assert len(lines) == 6


def test_solve_dirichlet_positivity_and_symmetry_1d():
    m = fm.coarse_mesh(fm.interval_domain())
    for _ in range(4):
        m = fm.uniform_refine(m)
    field, A, F = solve_dirichlet(m, 0.5, lambda p: np.ones(len(p)))
    assert np.allclose(A.matrix, A.matrix.T, atol=1e-12)
    w = np.linalg.eigvalsh(A.matrix)
    assert w.min() > 0
    # f >= 0 gives a nonnegative discrete solution on this corpus
    assert field.values.min() > -1e-10 * np.abs(field.values).max()
    # even data on a symmetric mesh gives an even solution
    x = m.vertices[:, 0]
    order = np.argsort(x)
    v = field.values[order]
    assert np.allclose(v, v[::-1], atol=1e-10)


def test_convergence_study_energy_errors_decrease_1d():
    t = convergence_study(fm.interval_domain(), 0.5, levels=3, start_level=1)
    errs = [r[3] for r in t.rows]
    assert all(e1 > e2 for e1, e2 in zip(errs, errs[1:]))
    assert abs(t.fitted_rate() - 0.5) < 0.1
