"""Global assembly: kernel constants, load vector, matrix structure."""

import math

import numpy as np
import pytest
from scipy import integrate

from fraclap import mesh as fm
from fraclap.assembly import (KernelConstants, NodalField, assemble_load,
                              assemble_stiffness, complement_mass,
                              energy_product, free_nodes, node_map,
                              pair_matrix, write_matrix)
from fraclap.quadrature import complement_weight


def test_kernel_constants_closed_forms():
    # c(1, 1/2) = 2 * (1/2) * Gamma(1) / (sqrt(pi) Gamma(1/2)) = 1/pi
    assert KernelConstants(1, 0.5).c_ds == pytest.approx(1.0 / math.pi)
    # c(2, 1/2) = 2 * (1/2) * Gamma(3/2) / (pi Gamma(1/2)) = 1/(2 pi)
    assert KernelConstants(2, 0.5).c_ds == pytest.approx(0.5 / math.pi)
    # s -> 0, 1 degeneration: constant vanishes linearly in s
    assert KernelConstants(1, 1e-8).c_ds == pytest.approx(1e-8, rel=1e-4)


@pytest.fixture(scope="module")
def interval16():
    m = fm.coarse_mesh(fm.interval_domain())
    for _ in range(3):
        m = fm.uniform_refine(m)
    return m


def test_free_nodes_and_node_map(interval16):
    m = interval16
    free = free_nodes(m)
    assert not m.boundary_flags[free].any()
    assert len(free) == m.num_vertices - int(m.boundary_flags.sum())
    gmap = node_map(m, free)
    assert (gmap[free] == np.arange(len(free))).all()
    assert (gmap[m.boundary_flags] == -1).all()


def test_nodal_field_zeros_roles(interval16):
    fld = NodalField.zeros(interval16)
    assert fld.values.shape == (interval16.num_vertices,)
    assert set(fld.free) == set(free_nodes(interval16))


def test_assemble_load_row_integrals(interval16):
    m = interval16
    free = free_nodes(m)
    F = assemble_load(m, lambda p: np.ones(len(p)), free=free)
    # for f = 1 each entry is the measure of the hat support / 2
    h = m.h_global
    assert np.allclose(F, h, atol=1e-14)
    # linear f is integrated exactly: F_i = h * x_i for interior nodes
    Fx = assemble_load(m, lambda p: p[:, 0], free=free)
    assert np.allclose(Fx, h * m.vertices[free, 0], atol=1e-14)


def test_stiffness_is_pair_part_plus_complement_part(interval16):
    m = interval16
    s = 0.35
    beta = 2.0 * s
    A = assemble_stiffness(m, s, None)
    gmap = A.gmap()
    n = len(A.free)
    P, _ = pair_matrix(m, beta, spec=A.spec, gmap=gmap, n_out=n)
    Mc = complement_mass(m, beta, gmap=gmap, n_out=n, spec=A.spec)
    c = A.constants.c_ds
    assert np.allclose(A.matrix, 0.5 * c * P + c * Mc, atol=1e-12)


def test_far_field_entry_matches_direct_double_integral(interval16):
    """Two hats with well separated supports interact only through the
    kernel cross term: A_ij = -c int int phi_i phi_j |x-y|^-(1+2s)."""
    m = interval16
    s = 0.4
    A = assemble_stiffness(m, s, None)
    x = m.vertices[A.free, 0]
    i = int(np.argmin(np.abs(x + 0.625)))
    j = int(np.argmin(np.abs(x - 0.625)))
    xi, xj = x[i], x[j]
    h = m.h_global

    def hat(t, c):
        return np.maximum(0.0, 1.0 - abs(t - c) / h)

    val, _ = integrate.dblquad(
        lambda y, t: hat(t, xi) * hat(y, xj) * abs(t - y) ** (-1.0 - 2 * s),
        xi - h, xi + h, lambda t: xj - h, lambda t: xj + h,
        epsabs=1e-13)
    expect = -KernelConstants(1, s).c_ds * val
    assert A.matrix[i, j] == pytest.approx(expect, rel=1e-6)


def test_energy_product_is_the_quadratic_form(interval16):
    A = assemble_stiffness(interval16, 0.5, None)
    rng = np.random.default_rng(0)
    u = rng.standard_normal(len(A.free))
    v = rng.standard_normal(len(A.free))
    assert energy_product(A, u, v) == pytest.approx(float(u @ A.matrix @ v))
    assert energy_product(A, u, v) == pytest.approx(energy_product(A, v, u))


def test_write_matrix_roundtrip(tmp_path, interval16):
    A = assemble_stiffness(interval16, 0.5, None)
    path = tmp_path / "A.txt"
    write_matrix(A, path)
    M = np.zeros(A.matrix.shape)
    for line in open(path):
        i, j, v = line.split()
        M[int(i), int(j)] = float(v)
    assert np.array_equal(M, A.matrix)


def test_complement_weight_scaling_under_dilation():
    """cw scales like lambda^-beta under dilation of the domain."""
    dom = fm.interval_domain()
    beta = 1.0
    x = np.array([0.3])
    base = complement_weight(x, dom, beta)
    # by the closed form, cw(x) = ((1+x)^-b + (1-x)^-b)/b on (-1, 1)
    expect = ((1 + 0.3) ** -beta + (1 - 0.3) ** -beta) / beta
    assert base == pytest.approx(expect, rel=1e-12)


def test_stiffness_free_subset_is_submatrix(interval16):
    m = interval16
    full = assemble_stiffness(m, 0.5, None)
    sub_free = full.free[1:-1]
    sub = assemble_stiffness(m, 0.5, None, free=sub_free)
    idx = np.searchsorted(full.free, sub_free)
    assert np.allclose(sub.matrix, full.matrix[np.ix_(idx, idx)], atol=1e-12)
