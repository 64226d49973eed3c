"""Quadrature for singular pair integrals and complement (exterior) weights.

Pair integrals int_T int_T' (...) |x-y|^{-d-beta} are classified by the
number of shared vertices.  Touching pairs (identical / shared edge /
shared vertex) use difference coordinates in which the integrand is
positively homogeneous, so the radial direction integrates exactly to a
Beta-function factor; only smooth "angular" integrals over the boundary
facets of the difference polytope remain, tabulated once per rule order.
Disjoint pairs use tensor Gauss with distance-driven subdivision.

The complement weight cw(x) = int_{Omega^c} |x-y|^{-d-beta} dy is reduced
to a boundary integral via the divergence identity
    div_y[(y-x) |x-y|^{-d-beta}] = -beta |x-y|^{-d-beta},
which is exact per straight boundary segment (Phi_p closed form with
p = 1 + beta/2) and a smooth 1D integral for exact circles.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import _core
from .gauss import duffy_triangle, gauss01, simplex_rule, triangle_rule
from .kernelfun import phi_table
from .mesh import Domain, Mesh


class PairClass(IntEnum):
    IDENTICAL = 0
    SHARED_EDGE = 1
    SHARED_VERTEX = 2
    DISJOINT = 3


@dataclass(frozen=True)
class QuadratureSpec:
    """Rule orders for pair quadrature.

    gauss_order_regular / gauss_order_singular are points per direction
    for well-separated / nearly-touching disjoint pairs; touching pairs
    use gauss_order_singular + 6 points per direction on the angular
    facets.  Disjoint pairs closer than comparable_distance_ratio times
    the larger diameter are subdivided (up to max_depth levels)."""

    gauss_order_regular: int = 4
    gauss_order_singular: int = 6
    comparable_distance_ratio: float = 1.0
    max_depth: int = 4

    def __post_init__(self):
        if self.gauss_order_regular < 2:
            raise ValueError("gauss_order_regular must be >= 2")
        if self.gauss_order_singular < 3:
            raise ValueError("gauss_order_singular must be >= 3")


# difference factors of degree one carried by each mode (see _core)
MODE_NDIFF = {0: 2, 1: 2, 2: 2, 3: 0, 4: 1, 5: 1}


def classify_pair(mesh, i, j):
    """PairClass of elements i, j by shared-vertex count."""
    if i == j:
        return PairClass.IDENTICAL
    shared = len(set(mesh.elements[i]) & set(mesh.elements[j]))
    if shared == 0:
        return PairClass.DISJOINT
    if shared == 1:
        return PairClass.SHARED_VERTEX
    if shared == mesh.dim:
        return PairClass.SHARED_EDGE
    raise ValueError("elements share a full facet set but are distinct")


# ---------------------------------------------------------------------------
# angular tables (geometry only; independent of beta and mode)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def table_identical_2d(n):
    """Rows (z1, z2, w) on the boundary of the difference hexagon of the
    unit simplex with itself; six straight segments, unit edge Jacobians."""
    segs = [((1, 0), (0, 1)), ((1, 0), (1, -1)), ((1, -1), (0, -1)),
            ((-1, 0), (0, -1)), ((-1, 0), (-1, 1)), ((-1, 1), (0, 1))]
    x, w = gauss01(n)
    rows = []
    for r1, r2 in segs:
        r1 = np.asarray(r1, dtype=float)
        r2 = np.asarray(r2, dtype=float)
        det = abs(r1[0] * r2[1] - r1[1] * r2[0])
        for xi, wi in zip(x, w):
            z = r1 + xi * (r2 - r1)
            rows.append((z[0], z[1], wi * det))
    return np.ascontiguousarray(rows, dtype=float)


@lru_cache(maxsize=None)
def table_edge_2d(n):
    """Rows (z1, z2, z3, w) for the shared-edge case; the difference
    polytope boundary splits into six triangles, all with unit Jacobian."""
    tris = [[(1, 0, 0), (1, 0, 1), (0, 1, 1)],
            [(1, 0, 0), (0, 1, 1), (0, 1, 0)],
            [(0, 0, 1), (1, 0, 1), (0, 1, 1)],
            [(0, 1, 0), (0, 1, 1), (-1, 1, 0)],
            [(0, 0, 1), (0, 1, 1), (-1, 1, 0)],
            [(0, 0, 1), (-1, 1, 0), (-1, 0, 0)]]
    u, v, wt = duffy_triangle(n)
    rows = []
    for tri in tris:
        p0, p1, p2 = (np.asarray(q, dtype=float) for q in tri)
        for ui, vi, wi in zip(u, v, wt):
            z = p0 + ui * (p1 - p0) + vi * (p2 - p0)
            rows.append((z[0], z[1], z[2], wi))
    return np.ascontiguousarray(rows, dtype=float)


@lru_cache(maxsize=None)
def table_vertex_2d(n):
    """Rows (u1, u2, v1, v2, w) for the shared-vertex case; the boundary
    facets are {u on the far edge} x {v in the simplex} and vice versa."""
    xp, wp = gauss01(n)
    u, v, wt = duffy_triangle(n)
    rows = []
    for pi, wpi in zip(xp, wp):
        for ui, vi, wi in zip(u, v, wt):
            rows.append((pi, 1.0 - pi, ui, vi, wpi * wi))
            rows.append((ui, vi, pi, 1.0 - pi, wpi * wi))
    return np.ascontiguousarray(rows, dtype=float)


@lru_cache(maxsize=None)
def table_identical_1d(n=0):
    return np.array([[1.0, 1.0], [-1.0, 1.0]])


@lru_cache(maxsize=None)
def table_vertex_1d(n):
    x, w = gauss01(n)
    rows = [(1.0, xi, wi) for xi, wi in zip(x, w)]
    rows += [(xi, 1.0, wi) for xi, wi in zip(x, w)]
    return np.ascontiguousarray(rows, dtype=float)


def touch_tables(dim, n):
    """(identical, edge, vertex) angular tables for n points per direction."""
    if dim == 2:
        return table_identical_2d(n), table_edge_2d(n), table_vertex_2d(n)
    # 1D has no shared-edge case; pass a shaped placeholder
    return table_identical_1d(), np.zeros((0, 4)), table_vertex_1d(n)


def rad_factors(dim, beta, mode):
    """Exact radial factors Beta(a, m) per touching case.

    a = q + n_diff - d - beta where q is the radial degree of the facet
    parametrization; the Beta's second argument encodes the piecewise-
    polynomial overlap factor of the difference domain."""
    nd = MODE_NDIFF[mode]
    gam = nd - dim - beta

    def bfun(a, m):
        if a <= 0:
            raise ValueError(
                f"pair integral diverges: radial exponent a={a:.3g} <= 0 "
                f"(dim={dim}, beta={beta}, mode={mode})")
        out = 1.0
        for k in range(m):
            out /= (a + k)
        for k in range(1, m):
            out *= k
        return out

    if dim == 2:
        rad_id = 0.5 * bfun(2.0 + gam, 3)
        rad_ed = bfun(3.0 + gam, 2)
        rad_vx = bfun(4.0 + gam, 1)
    else:
        rad_id = bfun(1.0 + gam, 2)
        rad_ed = 0.0
        rad_vx = bfun(2.0 + gam, 1)
    return rad_id, rad_ed, rad_vx


def disjoint_rules(dim, spec):
    """(bary_lo, w_lo, bary_hi, w_hi) barycentric tensor rules."""
    b_lo, w_lo = simplex_rule(dim, spec.gauss_order_regular)
    b_hi, w_hi = simplex_rule(dim, spec.gauss_order_singular)
    return (np.ascontiguousarray(b_lo), np.ascontiguousarray(w_lo),
            np.ascontiguousarray(b_hi), np.ascontiguousarray(w_hi))


def pair_args(dim, beta, mode, spec):
    """Bundle of positional arguments consumed by _core.pair_loop after
    (dim, verts, elems, tags, omega_only, beta, mode)."""
    n_ang = max(12, spec.gauss_order_singular + 6)
    tab_id, tab_ed, tab_vx = touch_tables(dim, n_ang)
    rad_id, rad_ed, rad_vx = rad_factors(dim, beta, mode)
    b_lo, w_lo, b_hi, w_hi = disjoint_rules(dim, spec)
    if dim == 2:
        b_f1, w_f1 = triangle_rule(4)
        b_f2, w_f2 = triangle_rule(2)
    else:
        b_f1, w_f1 = simplex_rule(dim, 4)
        b_f2, w_f2 = simplex_rule(dim, 3)
    return (tab_id, rad_id, tab_ed, rad_ed, tab_vx, rad_vx,
            b_lo, w_lo, b_hi, w_hi,
            np.ascontiguousarray(b_f1), np.ascontiguousarray(w_f1),
            np.ascontiguousarray(b_f2), np.ascontiguousarray(w_f2),
            float(spec.comparable_distance_ratio), int(spec.max_depth))


def weight_table_args(mode, dim=None, s=None):
    """Phi table arguments (p, dx, vals, inf, tmax) for a pair mode.

    Modes 1-4 evaluate the graph weights derived from Phi_p with
    p = (d+1+2s)/2; modes 0 and 5 never touch the table but numba still
    needs well-typed arrays."""
    if mode in (0, 5) or s is None:
        t = phi_table(1.0)
    else:
        t = phi_table((dim + 1.0 + 2.0 * s) / 2.0)
    p, dx, vals, inf, tmax = t.as_args()
    return float(p), float(dx), np.ascontiguousarray(vals), float(inf), float(tmax)


# ---------------------------------------------------------------------------
# one pair, standalone (test/oracle entry point; assembly uses _core.pair_loop)
# ---------------------------------------------------------------------------


def local_interaction_matrix(T, Tp, beta, spec=None, mode=0, u1=None, u2=None,
                             dim=None, s=None):
    """One-sided pair integral int_T int_Tp over the union of hats.

    T, Tp are (dim+1, dim) vertex coordinate arrays.  Returns (M, nodes)
    where nodes are the union vertex coordinates in the row order of M
    (shared vertices identified by coordinates).  For the scalar modes
    M is a 0-d value.  The symmetric T'xT contribution is NOT included;
    assembly doubles distinct pairs."""
    spec = spec or QuadratureSpec()
    T = np.asarray(T, dtype=float)
    Tp = np.asarray(Tp, dtype=float)
    d = T.shape[1]
    nn = d + 1
    scale = max(np.ptp(T), np.ptp(Tp), 1e-300)
    shared_i, shared_j = [], []
    for a in range(nn):
        for b in range(nn):
            if np.linalg.norm(T[a] - Tp[b]) <= 1e-12 * scale:
                shared_i.append(a)
                shared_j.append(b)
    nsh = len(shared_i)
    oth_i = [a for a in range(nn) if a not in shared_i]
    oth_j = [b for b in range(nn) if b not in shared_j]

    if nsh == nn:
        case = PairClass.IDENTICAL
        nodes = T.copy()
    elif nsh == 0:
        case = PairClass.DISJOINT
        nodes = np.vstack([T, Tp])
    elif nsh == 1:
        case = PairClass.SHARED_VERTEX
        nodes = np.vstack([T[shared_i], T[oth_i], Tp[oth_j]])
    elif nsh == d:
        case = PairClass.SHARED_EDGE
        nodes = np.vstack([T[shared_i], T[oth_i], Tp[oth_j]])
    else:
        raise ValueError("inconsistent shared-vertex pattern")
    nloc = len(nodes)

    u1l = np.zeros(6)
    u2l = np.zeros(6)
    if u1 is not None:
        u1l[:nloc] = np.asarray(u1, dtype=float)[:nloc]
    if u2 is not None:
        u2l[:nloc] = np.asarray(u2, dtype=float)[:nloc]
    p, dx, vals, inf, tmax = weight_table_args(mode, dim=d, s=s)
    Aloc = np.zeros((6, 6))
    xc = np.zeros((6, 2))
    xc[:nloc, :d] = nodes

    if case == PairClass.DISJOINT:
        b_lo, w_lo, b_hi, w_hi = disjoint_rules(d, spec)
        xc1 = np.zeros((3, 2))
        xc2 = np.zeros((3, 2))
        xc1[:nn, :d] = T
        xc2[:nn, :d] = Tp
        p1inv = np.empty(6)
        p2inv = np.empty(6)
        _core._make_pinv(d, xc1, p1inv)
        _core._make_pinv(d, xc2, p2inv)
        s_val = _core._pair_disjoint(d, xc1, xc2, p1inv, p2inv,
                                     b_lo, w_lo, b_hi, w_hi,
                                     float(spec.comparable_distance_ratio),
                                     int(spec.max_depth),
                                     float(beta), int(mode), u1l, u2l,
                                     dx, vals, p, inf, tmax, Aloc)
    else:
        n_ang = max(12, spec.gauss_order_singular + 6)
        tabs = touch_tables(d, n_ang)
        rads = rad_factors(d, beta, mode)
        tab = tabs[int(case)]
        rad = rads[int(case)]
        s_val = _core._pair_touch(d, int(case), xc, tab, rad, float(beta),
                                  int(mode), u1l, u2l,
                                  dx, vals, p, inf, tmax, Aloc)
    if mode in (0, 1, 2):
        return Aloc[:nloc, :nloc].copy(), nodes
    return s_val, nodes


# ---------------------------------------------------------------------------
# complement weight
# ---------------------------------------------------------------------------


def _circle_orientations(domain):
    """+1 for circles bounding the domain from outside, -1 for holes."""
    signs = []
    for c in domain.circles:
        sd = c.signed_distance(domain.polygon)
        signs.append(-1.0 if np.all(sd > 1e-12 * c.radius) else 1.0)
    return signs


def _cw_circle(x, circle, beta, sign):
    cx, cy = circle.center
    R = circle.radius

    def f(th):
        yx = cx + R * np.cos(th) - x[0]
        yy = cy + R * np.sin(th) - x[1]
        r2 = yx * yx + yy * yy
        dot = yx * np.cos(th) + yy * np.sin(th)
        return dot * r2 ** (-(2.0 + beta) / 2.0) * R

    th0 = np.arctan2(x[1] - cy, x[0] - cx) % (2 * np.pi)
    val, _ = integrate.quad(f, 0.0, 2.0 * np.pi, points=[th0],
                            limit=200, epsabs=1e-13, epsrel=1e-12)
    return sign * val / beta


def boundary_segments(mesh):
    """Boundary of the meshed domain as a flat (nb, 4) array [ax ay bx by],
    oriented with the domain on the left (outward normal (ty, -tx))."""
    segs = mesh.boundary_polyline()
    return np.ascontiguousarray(segs.reshape(len(segs), -1))


def domain_segments(domain):
    poly = domain.polygon
    nb = len(poly)
    segs = np.empty((nb, 4))
    for i in range(nb):
        segs[i, :2] = poly[i]
        segs[i, 2:] = poly[(i + 1) % nb]
    return segs


def complement_weight(x, domain, beta):
    """cw(x) = int over the complement of the domain of |x-y|^{-d-beta} dy.

    domain may be a Domain (exact circles when present, else its polygon)
    or a Mesh (its own polygonal boundary).  x is a point or (n, d) array."""
    beta = float(beta)
    if isinstance(domain, Mesh):
        dim = domain.dim
        if dim == 1:
            bp = domain.boundary_polyline()
            a, b = float(bp[0, 0]), float(bp[1, 0])
            return _cw_interval_py(x, a, b, beta)
        segs = boundary_segments(domain)
        return _cw_polygon_py(x, segs, beta)
    if not isinstance(domain, Domain):
        raise TypeError("domain must be a Domain or a Mesh")
    if domain.dim == 1:
        a, b = domain.interval
        return _cw_interval_py(x, a, b, beta)
    if domain.circles:
        signs = _circle_orientations(domain)
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.array([sum(_cw_circle(pt, c, beta, sg)
                            for c, sg in zip(domain.circles, signs))
                        for pt in pts])
        return out[0] if np.ndim(x) == 1 else out
    return _cw_polygon_py(x, domain_segments(domain), beta)


def _cw_interval_py(x, a, b, beta):
    x = np.asarray(x, dtype=float)
    xs = x.reshape(-1)
    out = ((xs - a) ** (-beta) + (b - xs) ** (-beta)) / beta
    return float(out[0]) if x.ndim == 0 or x.size == 1 else out


def _cw_polygon_py(x, segs, beta):
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    t = phi_table(1.0 + beta / 2.0)
    p, dx, vals, inf, tmax = t.as_args()
    mask = np.zeros(len(segs), dtype=np.int64)
    out = np.array([_core.cw_segments(pt[0], pt[1], segs, beta,
                                      dx, vals, p, inf, tmax, mask, False, 0)
                    for pt in pts])
    return float(out[0]) if np.ndim(x) == 1 else out


# ---------------------------------------------------------------------------
# plain element quadrature
# ---------------------------------------------------------------------------


def element_quadrature(T, f, order):
    """int_T f dx by an order-point (per direction) rule; f maps (n, dim)
    points to values."""
    T = np.asarray(T, dtype=float)
    dim = T.shape[1]
    bary, w = simplex_rule(dim, order)
    pts = bary @ T
    if dim == 1:
        vol = abs(T[1, 0] - T[0, 0])
    else:
        vol = 0.5 * abs((T[1, 0] - T[0, 0]) * (T[2, 1] - T[0, 1])
                        - (T[1, 1] - T[0, 1]) * (T[2, 0] - T[0, 0]))
    return float(vol * np.dot(w, np.asarray(f(pts), dtype=float)))
