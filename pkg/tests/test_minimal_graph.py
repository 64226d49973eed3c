"""Nonlocal minimal graphs: kernels, energy calculus, Newton solver."""

import math

import numpy as np
import pytest
from scipy import integrate

from fraclap.assembly import KernelConstants, assemble_stiffness
from fraclap.minimal_graph import (GraphKernel, energy, geometric_error_classical,
                                   geometric_error_es, graph_preset, jacobian,
                                   kernel_eval, residual, seminorm_w2s1,
                                   solve_graph_newton, stickiness_indicator)


@pytest.mark.parametrize("d,s", [(1, 0.25), (2, 0.25), (1, 0.1), (2, 0.4)])
def test_kernel_values_and_identity(d, s):
    k = GraphKernel(d, s)
    assert k.F(0.0) == 0.0
    assert k.G(0.0) == 0.0
    assert k.Gtilde(0.0) == pytest.approx(1.0, abs=1e-12)
    assert k.Gprime(0.0) == pytest.approx(1.0, abs=1e-14)
    for rho in (0.5, 1.0, 10.0):
        assert abs(rho * k.Gtilde(rho) - k.G(rho)) < 1e-10
    # F is even and nonnegative; G odd and increasing
    assert k.F(1.3) == pytest.approx(k.F(-1.3), rel=1e-12)
    assert k.F(1.3) > 0
    assert k.G(-2.0) == pytest.approx(-k.G(2.0), rel=1e-12)
    assert k.G(2.0) > k.G(1.0) > 0


def test_kernel_matches_defining_integrals():
    k = GraphKernel(1, 0.25)
    p = k.p
    for rho in (0.3, 1.7):
        F_ref, _ = integrate.quad(
            lambda r: (rho - r) * (1 + r * r) ** -p, 0.0, rho, epsabs=1e-14)
        G_ref, _ = integrate.quad(
            lambda r: (1 + r * r) ** -p, 0.0, rho, epsabs=1e-14)
        assert abs(k.F(rho) - F_ref) < 1e-12
        assert abs(k.G(rho) - G_ref) < 1e-12
        assert abs(k.Gprime(rho) - (1 + rho * rho) ** -p) < 1e-14


def test_kernel_g_bounded_limit():
    k = GraphKernel(1, 0.25)
    lim_diff = abs(k.G(1e6) - k.G(1e3))
    assert lim_diff < 1e-3 * k.G(1e6)


def test_kernel_eval_dispatch_and_domain():
    assert kernel_eval("Gtilde", 0.0, 1, 0.25) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        GraphKernel(1, 0.75)


def test_ctilde_constant():
    assert GraphKernel(1, 0.25).c_tilde == pytest.approx(0.25)
    assert GraphKernel(2, 0.25).c_tilde == pytest.approx(0.5 / math.pi)


@pytest.fixture(scope="module")
def sign_problem():
    return graph_preset("ex-1d-sign", level=2, s=0.25)


def test_zero_datum_zero_energy():
    prob = graph_preset("ex-1d-sign", level=1, s=0.25)
    st = prob.initial_state()
    st.values[:] = 0.0
    assert energy(st) == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(residual(st), 0.0, atol=1e-12)
    u, rep = solve_graph_newton(prob, state=st)
    assert rep.converged and rep.iterations <= 1


def test_gradient_matches_energy_fd(sign_problem):
    prob = sign_problem
    rng = np.random.default_rng(0)
    st = prob.initial_state()
    st.values[prob.free] = 0.3 * rng.standard_normal(int(prob.free.sum()))
    r = residual(st)
    eps = 1e-5
    nfree = int(prob.free.sum())
    scale = max(1.0, np.abs(r).max())
    for i in rng.choice(nfree, size=min(6, nfree), replace=False):
        e = np.zeros(nfree)
        e[i] = 1.0
        ep = st.replaced(st.values[prob.free] + eps * e)
        em = st.replaced(st.values[prob.free] - eps * e)
        fd = (energy(ep) - energy(em)) / (2 * eps)
        assert abs(r[i] - fd) < 1e-5 * scale


def test_jacobian_matches_residual_fd(sign_problem):
    prob = sign_problem
    rng = np.random.default_rng(1)
    st = prob.initial_state()
    st.values[prob.free] = 0.2 * rng.standard_normal(int(prob.free.sum()))
    J = jacobian(st)
    assert np.allclose(J, J.T, atol=1e-10)
    np.linalg.cholesky(J)    # positive definite
    v = rng.standard_normal(J.shape[0])
    eps = 1e-6
    rp = residual(st.replaced(st.values[prob.free] + eps * v))
    rm = residual(st.replaced(st.values[prob.free] - eps * v))
    fd = (rp - rm) / (2 * eps)
    assert np.max(np.abs(J @ v - fd)) < 1e-5 * max(1.0, np.abs(fd).max())


def test_jacobian_at_zero_is_higher_order_stiffness(sign_problem):
    """With u = 0 the Newton weight is 1, so the Jacobian is the linear
    form of order s + 1/2 up to its normalizing constant."""
    prob = sign_problem
    st = prob.initial_state()
    st.values[:] = 0.0
    J = jacobian(st)
    m = prob.mesh
    shalf = prob.s + 0.5
    A = assemble_stiffness(m, shalf, prob.spec, free=np.flatnonzero(prob.free))
    scale = 2.0 / KernelConstants(1, shalf).c_ds
    assert np.max(np.abs(J - scale * A.matrix)) < 1e-8 * np.max(np.abs(J))


def test_newton_converges_energy_decreases(sign_problem):
    u, rep = solve_graph_newton(sign_problem, tol=1e-10)
    assert rep.converged
    e = rep.energies
    assert all(a > b for a, b in zip(e, e[1:]))
    # odd datum on a symmetric mesh gives an odd solution
    x = sign_problem.mesh.vertices[:, 0]
    order = np.argsort(x)
    v = u.values[order]
    assert np.allclose(v, -v[::-1], atol=1e-9)
    # comparison sanity: datum bounds hold at the free nodes
    assert u.values.min() >= -1.0 - 1e-8 and u.values.max() <= 1.0 + 1e-8


def test_fixed_point_variant_also_descends(sign_problem):
    u, rep = solve_graph_newton(sign_problem, tol=1e-6, variant="fixed-point",
                                max_iter=80)
    assert rep.converged
    e = rep.energies
    assert all(a > b for a, b in zip(e, e[1:]))


def test_seminorm_finite_and_positive(sign_problem):
    u, rep = solve_graph_newton(sign_problem, tol=1e-10)
    val = seminorm_w2s1(u)
    assert np.isfinite(val) and val > 0.0


def test_geometric_errors_basic_properties(sign_problem):
    prob = sign_problem
    rng = np.random.default_rng(3)
    a = prob.initial_state()
    a.values[prob.free] = 0.4 * rng.standard_normal(int(prob.free.sum()))
    b = prob.initial_state()
    b.values[prob.free] = 0.4 * rng.standard_normal(int(prob.free.sum()))
    assert geometric_error_es(a, a) == pytest.approx(0.0, abs=1e-10)
    assert geometric_error_es(a, b) == pytest.approx(
        geometric_error_es(b, a), rel=1e-10)
    assert geometric_error_es(a, b) > 0
    # the two classical quadrature forms agree identically
    e1 = geometric_error_classical(a, b, form="inner")
    e2 = geometric_error_classical(a, b, form="normal")
    assert e1 == pytest.approx(e2, rel=1e-12)


def test_es_approaches_classical_near_half(sign_problem):
    prob_half = graph_preset("ex-1d-sign", level=2, s=0.499)
    rng = np.random.default_rng(4)
    nfree = int(prob_half.free.sum())
    a = prob_half.initial_state()
    a.values[prob_half.free] = 0.3 * rng.standard_normal(nfree)
    b = prob_half.initial_state()
    b.values[prob_half.free] = 0.3 * rng.standard_normal(nfree)
    es = geometric_error_es(a, b)
    e = geometric_error_classical(a, b)
    assert abs(es - e) / e < 0.05


def test_stickiness_indicator_positive(sign_problem):
    u, _ = solve_graph_newton(sign_problem, tol=1e-10)
    assert stickiness_indicator(u) > 0.0


@pytest.mark.parametrize("name", ["ex-annulus", "ex-disk-multis"])
def test_2d_presets_converge_with_descent(name):
    prob = graph_preset(name, level=0, s=0.25)
    u, rep = solve_graph_newton(prob, tol=1e-8)
    assert rep.converged
    e = rep.energies
    assert all(a > b for a, b in zip(e, e[1:]))
    g = prob.datum(prob.mesh.vertices)
    assert u.values.min() >= min(g.min(), 0.0) - 1e-8
    assert u.values.max() <= max(g.max(), 0.0) + 1e-8
