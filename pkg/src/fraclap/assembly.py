"""Galerkin assembly for the integral fractional Laplacian.

The bilinear form is
    (v, w)_s = (C_{d,s}/2) * [ double integral over L x L
                               + 2 * int_L v(x) w(x) cw(x) dx ]
where L is the meshed region, cw the complement weight, and C_{d,s} the
normalizing constant.  P1 hats vanish outside L, so the complement part
is a weighted mass matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _core
from .gauss import simplex_rule
from .kernelfun import phi_table
from .quadrature import QuadratureSpec, boundary_segments, pair_args, weight_table_args


@dataclass(frozen=True)
class KernelConstants:
    """Normalizing constant of (-Delta)^s in dimension d."""
    d: int
    s: float
    c_ds: float = field(init=False)

    def __post_init__(self):
        d, s = self.d, self.s
        c = (4.0 ** s * s * math.gamma(s + d / 2.0)
             / (math.pi ** (d / 2.0) * math.gamma(1.0 - s)))
        object.__setattr__(self, "c_ds", c)


ROLE_FREE = 0
ROLE_FIXED_ZERO = 1
ROLE_FIXED_DATUM = 2


@dataclass
class NodalField:
    """P1 nodal values with per-node roles (free / fixed-zero / fixed-datum)."""
    mesh: object
    values: np.ndarray
    roles: np.ndarray

    @classmethod
    def zeros(cls, mesh, roles=None):
        if roles is None:
            roles = np.where(mesh.boundary_flags, ROLE_FIXED_ZERO, ROLE_FREE)
        return cls(mesh, np.zeros(mesh.num_vertices), np.asarray(roles))

    @property
    def free(self):
        return np.flatnonzero(self.roles == ROLE_FREE)


@dataclass
class StiffnessMatrix:
    """Dense Galerkin matrix over the free nodes of a mesh."""
    mesh: object
    s: float
    matrix: np.ndarray          # (n_free, n_free)
    free: np.ndarray            # global vertex index per row
    constants: KernelConstants
    spec: QuadratureSpec

    @property
    def shape(self):
        return self.matrix.shape

    def gmap(self):
        g = np.full(self.mesh.num_vertices, -1, dtype=np.int64)
        g[self.free] = np.arange(len(self.free))
        return g


def free_nodes(mesh):
    """Interior vertices (homogeneous Dirichlet exterior condition)."""
    return np.flatnonzero(~mesh.boundary_flags)


def node_map(mesh, free):
    gmap = np.full(mesh.num_vertices, -1, dtype=np.int64)
    gmap[np.asarray(free)] = np.arange(len(free))
    return gmap


def pair_matrix(mesh, beta, mode=0, spec=None, u1=None, u2=None,
                gmap=None, n_out=None, omega_only=False, s=None):
    """Sum over unordered element pairs of the mode's pair integral
    (distinct pairs doubled, covering both integration orders).

    Returns (matrix, scalar); matrix is (n_out, n_out) for the matrix
    modes and empty otherwise.  gmap sends vertex ids to rows (-1 skips).
    With omega_only, pairs with both elements tagged nonzero are skipped."""
    spec = spec or QuadratureSpec()
    nv = mesh.num_vertices
    if u1 is None:
        u1 = np.zeros(nv)
    if u2 is None:
        u2 = np.zeros(nv)
    if gmap is None:
        gmap = np.arange(nv, dtype=np.int64)
        n_out = nv
    if mode in (0, 1, 2):
        A = np.zeros((n_out, n_out))
    else:
        A = np.zeros((1, 1))
    p, dx, vals, inf, tmax = weight_table_args(mode, dim=mesh.dim, s=s)
    args = pair_args(mesh.dim, float(beta), mode, spec)
    verts = np.ascontiguousarray(mesh.vertices, dtype=float)
    elems = np.ascontiguousarray(mesh.elements, dtype=np.int64)
    tags = np.ascontiguousarray(mesh.element_tags, dtype=np.int64)
    scalar = _core.pair_loop(mesh.dim, verts, elems, tags, bool(omega_only),
                             float(beta), int(mode), *args,
                             np.ascontiguousarray(u1, dtype=float),
                             np.ascontiguousarray(u2, dtype=float),
                             dx, vals, p, inf, tmax,
                             np.ascontiguousarray(gmap, dtype=np.int64),
                             A, 2.0)
    return A, scalar


def complement_mass(mesh, beta, gmap=None, n_out=None, omega_only=False,
                    spec=None, tol=1e-9, max_depth=16, near_factor=10.0):
    """Weighted mass matrix M_ij = int phi_i phi_j cw(x) dx over the mesh
    (cw from the mesh's own polygonal boundary)."""
    spec = spec or QuadratureSpec()
    nv = mesh.num_vertices
    if gmap is None:
        gmap = np.arange(nv, dtype=np.int64)
        n_out = nv
    A = np.zeros((n_out, n_out))
    t = phi_table(1.0 + beta / 2.0)
    p, dx, vals, inf, tmax = t.as_args()
    verts = np.ascontiguousarray(mesh.vertices, dtype=float)
    elems = np.ascontiguousarray(mesh.elements, dtype=np.int64)
    tags = np.ascontiguousarray(mesh.element_tags, dtype=np.int64)
    gmap = np.ascontiguousarray(gmap, dtype=np.int64)
    if mesh.dim == 2:
        segs = boundary_segments(mesh)
        bary, bw = simplex_rule(2, spec.gauss_order_singular)
        _core.complement_mass_2d(verts, elems, tags, bool(omega_only),
                                 float(beta), segs, dx, vals, p, inf, tmax,
                                 np.ascontiguousarray(bary),
                                 np.ascontiguousarray(bw),
                                 float(tol), int(max_depth),
                                 float(near_factor), gmap, A)
    else:
        bp = mesh.boundary_polyline()
        bpts = np.array([[float(bp[0, 0]), -1.0], [float(bp[1, 0]), 1.0]])
        x01, w01 = simplex_rule(1, spec.gauss_order_singular)
        _core.complement_mass_1d(verts, elems, tags, bool(omega_only),
                                 float(beta), bpts,
                                 np.ascontiguousarray(x01[:, 1].copy()),
                                 np.ascontiguousarray(w01),
                                 float(tol), int(max_depth), gmap, A)
    return A


def assemble_stiffness(mesh, s, spec=None, free=None):
    """Galerkin matrix of (., .)_s over the free (interior) nodes."""
    spec = spec or QuadratureSpec()
    s = float(s)
    if free is None:
        free = free_nodes(mesh)
    free = np.asarray(free, dtype=np.int64)
    gmap = node_map(mesh, free)
    const = KernelConstants(mesh.dim, s)
    beta = 2.0 * s
    P, _ = pair_matrix(mesh, beta, mode=0, spec=spec,
                       gmap=gmap, n_out=len(free))
    Mc = complement_mass(mesh, beta, gmap=gmap, n_out=len(free), spec=spec)
    A = 0.5 * const.c_ds * P + const.c_ds * Mc
    A = 0.5 * (A + A.T)   # symmetrize away quadrature round-off
    return StiffnessMatrix(mesh, s, A, free, const, spec)


def assemble_load(mesh, f, free=None, order=6):
    """Load vector int f phi_i over the free nodes; f maps (n, dim) -> (n,)."""
    if free is None:
        free = free_nodes(mesh)
    free = np.asarray(free, dtype=np.int64)
    gmap = node_map(mesh, free)
    bary, w = simplex_rule(mesh.dim, order)
    F = np.zeros(mesh.num_vertices)
    vols = mesh.element_volumes()
    for e in range(mesh.num_elements):
        conn = mesh.elements[e]
        pts = bary @ mesh.vertices[conn]
        vals = np.asarray(f(pts), dtype=float)
        F[conn] += vols[e] * ((w * vals) @ bary)
    return F[free]


def energy_product(A, u, v):
    """u^T A v for free-node coefficient vectors."""
    M = A.matrix if isinstance(A, StiffnessMatrix) else A
    return float(np.asarray(u) @ M @ np.asarray(v))


def write_matrix(A, path):
    """Plain-text dump, one 'i j value' line per entry."""
    M = A.matrix if isinstance(A, StiffnessMatrix) else np.asarray(A)
    with open(path, "w") as fh:
        for i in range(M.shape[0]):
            for j in range(M.shape[1]):
                fh.write(f"{i} {j} {float(M[i, j])!r}\n")
