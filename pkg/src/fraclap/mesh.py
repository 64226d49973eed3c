"""Simplicial meshes of intervals and polygons, with boundary grading.

Meshes are immutable after construction.  Refinement produces a new mesh
that keeps a reference to its parent together with the edge data needed
to build prolongation operators (used by the multilevel preconditioner
and by reference-solution studies).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class MeshError(Exception):
    pass


@dataclass(frozen=True)
class Circle:
    center: tuple
    radius: float

    def project(self, pts):
        pts = np.asarray(pts, dtype=float)
        c = np.asarray(self.center, dtype=float)
        v = pts - c
        r = np.linalg.norm(v, axis=-1, keepdims=True)
        return c + self.radius * v / r

    def signed_distance(self, pts):
        c = np.asarray(self.center, dtype=float)
        return np.linalg.norm(np.asarray(pts, dtype=float) - c, axis=-1) - self.radius


@dataclass(frozen=True)
class Domain:
    """Interval (dim=1) or simple positively oriented polygon (dim=2).

    ``circles`` lists circular features (outer boundary or internal
    interfaces); boundary vertices carrying a circle id are re-projected
    onto their circle whenever refinement inserts edge midpoints.
    """

    dim: int
    interval: tuple = None          # (a, b) for dim=1
    polygon: np.ndarray = None      # (nb, 2) for dim=2
    circles: tuple = ()             # tuple of Circle
    name: str = "domain"

    def __post_init__(self):
        if self.dim == 1:
            a, b = self.interval
            if not b > a:
                raise MeshError("interval must have positive length")
        elif self.dim == 2:
            poly = np.asarray(self.polygon, dtype=float)
            object.__setattr__(self, "polygon", poly)
            if _polygon_area(poly) <= 0:
                raise MeshError("polygon must be simple and positively oriented")
        else:
            raise MeshError("dim must be 1 or 2")

    def diameter(self):
        if self.dim == 1:
            a, b = self.interval
            return b - a
        p = self.polygon
        d = 0.0
        for i in range(len(p)):
            d = max(d, np.max(np.linalg.norm(p - p[i], axis=1)))
        return float(d)

    def boundary_distance(self, pts):
        """Distance from points to the domain boundary.

        Uses circle geometry when the outer boundary is a circle (the
        polygon is only its inscribed approximation)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.dim == 1:
            a, b = self.interval
            x = pts[:, 0]
            return np.minimum(x - a, b - x)
        if self.circles:
            # distance to nearest circular feature
            d = np.min(np.abs(np.stack([c.signed_distance(pts) for c in self.circles])),
                       axis=0)
            return d
        return _polyline_distance(pts, _polygon_edges(self.polygon))


def _polygon_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _polygon_edges(poly):
    return np.stack([poly, np.roll(poly, -1, axis=0)], axis=1)


def _polyline_distance(pts, edges):
    d = np.full(len(pts), np.inf)
    for a, b in edges:
        ab = b - a
        t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
        proj = a + t[:, None] * ab
        d = np.minimum(d, np.linalg.norm(pts - proj, axis=1))
    return d


class Mesh:
    """Conforming simplicial mesh (d = 1 or 2).

    vertices       (nv, dim) coordinates
    elements       (ne, dim+1) vertex indices
    boundary_flags (nv,) True for vertices on the domain boundary
    circle_id      (nv,) index into domain.circles, -1 otherwise
    element_tags   (ne,) integer region tags (0 by default)
    """

    def __init__(self, dim, vertices, elements, domain=None, boundary_flags=None,
                 circle_id=None, element_tags=None, parent=None, parent_edges=None,
                 h_global=None, mu=1.0):
        self.dim = int(dim)
        self.vertices = np.ascontiguousarray(vertices, dtype=float).reshape(-1, self.dim)
        self.elements = np.ascontiguousarray(elements, dtype=np.int64).reshape(-1, self.dim + 1)
        self.domain = domain
        nv = len(self.vertices)
        if boundary_flags is None:
            boundary_flags = self._topological_boundary_flags()
        self.boundary_flags = np.asarray(boundary_flags, dtype=bool)
        self.circle_id = (np.full(nv, -1, dtype=np.int64) if circle_id is None
                          else np.asarray(circle_id, dtype=np.int64))
        self.element_tags = (np.zeros(len(self.elements), dtype=np.int64)
                             if element_tags is None
                             else np.asarray(element_tags, dtype=np.int64))
        self.parent = parent
        # parent_edges: (n_new, 2) parent vertex indices for each vertex
        # beyond the parent's vertex count (midpoint refinement data)
        self.parent_edges = parent_edges
        self.mu = float(mu)
        if np.any(self.element_volumes() <= 0):
            raise MeshError("every element must have positive measure")
        self.h_global = float(h_global) if h_global is not None else float(np.max(self.element_diameters()))

    # -- cached geometry ------------------------------------------------
    def element_coords(self):
        return self.vertices[self.elements]

    def element_volumes(self):
        xc = self.element_coords()
        if self.dim == 1:
            return np.abs(xc[:, 1, 0] - xc[:, 0, 0])
        a = xc[:, 1] - xc[:, 0]
        b = xc[:, 2] - xc[:, 0]
        return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])

    def element_diameters(self):
        xc = self.element_coords()
        if self.dim == 1:
            return np.abs(xc[:, 1, 0] - xc[:, 0, 0])
        e0 = np.linalg.norm(xc[:, 1] - xc[:, 0], axis=1)
        e1 = np.linalg.norm(xc[:, 2] - xc[:, 1], axis=1)
        e2 = np.linalg.norm(xc[:, 0] - xc[:, 2], axis=1)
        return np.maximum(np.maximum(e0, e1), e2)

    def element_inball_diameters(self):
        if self.dim == 1:
            return self.element_diameters()
        xc = self.element_coords()
        e0 = np.linalg.norm(xc[:, 1] - xc[:, 0], axis=1)
        e1 = np.linalg.norm(xc[:, 2] - xc[:, 1], axis=1)
        e2 = np.linalg.norm(xc[:, 0] - xc[:, 2], axis=1)
        return 4.0 * self.element_volumes() / (e0 + e1 + e2)

    def centroids(self):
        return np.mean(self.element_coords(), axis=1)

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_elements(self):
        return len(self.elements)

    def h_max(self):
        return float(np.max(self.element_diameters()))

    def h_min(self):
        return float(np.min(self.element_diameters()))

    def interior_mask(self):
        return ~self.boundary_flags

    # -- topology -------------------------------------------------------
    def edges(self):
        """Unique edges as sorted vertex pairs plus per-edge element count."""
        el = self.elements
        if self.dim == 1:
            pairs = el
        else:
            pairs = np.vstack([el[:, [0, 1]], el[:, [1, 2]], el[:, [2, 0]]])
        pairs = np.sort(pairs, axis=1)
        uniq, counts = np.unique(pairs, axis=0, return_counts=True)
        return uniq, counts

    def boundary_edges(self):
        if self.dim == 1:
            a = np.argmin(self.vertices[:, 0])
            b = np.argmax(self.vertices[:, 0])
            return np.array([[a], [b]])
        uniq, counts = self.edges()
        return uniq[counts == 1]

    def boundary_polyline(self):
        """Boundary segments as a (nb, 2, dim) coordinate array, oriented
        so that the outward normal convention of the parent polygon holds."""
        if self.dim == 1:
            a, b = float(np.min(self.vertices)), float(np.max(self.vertices))
            return np.array([[a], [b]])
        be = self.boundary_edges()
        segs = self.vertices[be]
        # orient each edge positively around the domain: outward normal is
        # (t_y, -t_x) for a counterclockwise boundary
        edge_to_elem = {}
        el = self.elements
        for e in range(len(el)):
            for k in range(3):
                key = tuple(sorted((el[e, k], el[e, (k + 1) % 3])))
                edge_to_elem.setdefault(key, []).append((e, el[e, k], el[e, (k + 1) % 3]))
        out = np.empty_like(segs)
        for i, (a, b) in enumerate(be):
            (e, va, vb), = edge_to_elem[(a, b)]
            # element orientation is CCW, so the edge (va, vb) as stored in
            # the element runs CCW around the domain
            out[i, 0] = self.vertices[va]
            out[i, 1] = self.vertices[vb]
        return out

    def _topological_boundary_flags(self):
        flags = np.zeros(len(self.vertices), dtype=bool)
        if self.dim == 1:
            flags[np.argmin(self.vertices[:, 0])] = True
            flags[np.argmax(self.vertices[:, 0])] = True
            return flags
        uniq, counts = self.edges()
        for a, b in uniq[counts == 1]:
            flags[a] = flags[b] = True
        return flags

    def vertex_to_elements(self):
        v2e = [[] for _ in range(self.num_vertices)]
        for e, conn in enumerate(self.elements):
            for v in conn:
                v2e[v].append(e)
        return v2e

    def prolongation(self):
        """Sparse map from parent vertex values to this mesh's vertex values."""
        if self.parent is None:
            raise MeshError("mesh has no parent")
        nvp = self.parent.num_vertices
        nv = self.num_vertices
        rows, cols, vals = [], [], []
        for i in range(nvp):
            rows.append(i); cols.append(i); vals.append(1.0)
        for k, (a, b) in enumerate(self.parent_edges):
            i = nvp + k
            rows += [i, i]; cols += [int(a), int(b)]; vals += [0.5, 0.5]
        return sp.csr_matrix((vals, (rows, cols)), shape=(nv, nvp))


@dataclass
class MeshHierarchy:
    levels: list = field(default_factory=list)

    def __post_init__(self):
        hs = [m.h_global for m in self.levels]
        if any(h2 >= h1 for h1, h2 in zip(hs, hs[1:])):
            raise MeshError("level meshsizes must be strictly decreasing")

    @property
    def finest(self):
        return self.levels[-1]

    def meshsizes(self):
        return [m.h_global for m in self.levels]


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def shape_regularity(mesh):
    """max over elements of h_T / rho_T (rho_T = inscribed-ball diameter)."""
    return float(np.max(mesh.element_diameters() / mesh.element_inball_diameters()))


def first_ring(mesh, elem):
    """Elements sharing at least one vertex with ``elem`` (itself included)."""
    if elem < 0 or elem >= mesh.num_elements:
        raise MeshError(f"invalid element id {elem}")
    verts = set(mesh.elements[elem])
    out = set()
    for e, conn in enumerate(mesh.elements):
        if verts.intersection(conn):
            out.add(e)
    return out


def _snap_midpoints(domain, circle_id, edge_pairs, mids):
    """Project midpoints of same-circle edges back onto their circle."""
    if domain is None or not domain.circles:
        return mids, np.full(len(mids), -1, dtype=np.int64)
    cid = np.full(len(mids), -1, dtype=np.int64)
    for k, (a, b) in enumerate(edge_pairs):
        ca, cb = circle_id[a], circle_id[b]
        if ca >= 0 and ca == cb:
            mids[k] = domain.circles[ca].project(mids[k])
            cid[k] = ca
    return mids, cid


def uniform_refine(mesh):
    """Red refinement: every element split into 2^d children."""
    if mesh.dim == 1:
        return _uniform_refine_1d(mesh)
    verts = mesh.vertices
    el = mesh.elements
    pairs = np.vstack([el[:, [0, 1]], el[:, [1, 2]], el[:, [2, 0]]])
    pairs = np.sort(pairs, axis=1)
    uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
    mids = 0.5 * (verts[uniq[:, 0]] + verts[uniq[:, 1]])
    mids, mid_cid = _snap_midpoints(mesh.domain, mesh.circle_id, uniq, mids)
    nv0 = len(verts)
    new_verts = np.vstack([verts, mids])
    m01 = nv0 + inv[: len(el)]
    m12 = nv0 + inv[len(el): 2 * len(el)]
    m20 = nv0 + inv[2 * len(el):]
    a, b, c = el[:, 0], el[:, 1], el[:, 2]
    children = np.vstack([
        np.column_stack([a, m01, m20]),
        np.column_stack([b, m12, m01]),
        np.column_stack([c, m20, m12]),
        np.column_stack([m01, m12, m20]),
    ])
    tags = np.concatenate([mesh.element_tags] * 4)
    new_cid = np.concatenate([mesh.circle_id, mid_cid])
    refined = Mesh(2, new_verts, children, domain=mesh.domain,
                   circle_id=new_cid, element_tags=tags,
                   parent=mesh, parent_edges=uniq,
                   h_global=mesh.h_global / 2.0, mu=mesh.mu)
    return refined


def _uniform_refine_1d(mesh):
    verts = mesh.vertices
    el = mesh.elements
    mids = 0.5 * (verts[el[:, 0]] + verts[el[:, 1]])
    nv0 = len(verts)
    new_verts = np.vstack([verts, mids])
    midx = nv0 + np.arange(len(el))
    children = np.vstack([
        np.column_stack([el[:, 0], midx]),
        np.column_stack([midx, el[:, 1]]),
    ])
    tags = np.concatenate([mesh.element_tags] * 2)
    cid = np.concatenate([mesh.circle_id, np.full(len(el), -1, dtype=np.int64)])
    return Mesh(1, new_verts, children, domain=mesh.domain,
                circle_id=cid, element_tags=tags,
                parent=mesh, parent_edges=np.sort(el, axis=1),
                h_global=mesh.h_global / 2.0, mu=mesh.mu)


def build_hierarchy(coarse, levels):
    """Nested uniform-refinement hierarchy with ``levels`` refinements."""
    out = [coarse]
    for _ in range(levels):
        out.append(uniform_refine(out[-1]))
    return MeshHierarchy(out)


# ---------------------------------------------------------------------------
# graded construction
# ---------------------------------------------------------------------------

SIGMA_CAP = 10.0


def build_graded(domain, h, mu=1.0, sigma_cap=SIGMA_CAP, coarse=None):
    """Mesh with element sizes h^mu at the boundary and
    h * dist(T, boundary)^((mu-1)/mu) in the interior.

    mu = 1 yields a quasi-uniform mesh of size h.  In 2D the mesh is
    produced by longest-edge bisection of a coarse preset mesh, marking
    every element that violates the target size until none does.
    """
    if mu < 1.0:
        raise MeshError("mu must be >= 1")
    if h > domain.diameter():
        raise MeshError("h must not exceed the domain diameter")
    if domain.dim == 1:
        return _graded_interval(domain, h, mu)

    mesh = coarse if coarse is not None else coarse_mesh(domain)
    for _ in range(10000):
        hT = mesh.element_diameters()
        dist = domain.boundary_distance(mesh.centroids())
        dist = np.maximum(dist - 0.5 * hT, 0.0)   # distance of the element, not its centroid
        target = np.where(dist <= 0.0, h ** mu,
                          np.maximum(h ** mu, h * dist ** ((mu - 1.0) / mu)))
        marked = np.nonzero(hT > target)[0]
        if len(marked) == 0:
            break
        mesh = bisect(mesh, marked)
    else:
        raise MeshError("grading did not terminate")
    sigma = shape_regularity(mesh)
    if sigma > sigma_cap:
        worst = int(np.argmax(mesh.element_diameters() / mesh.element_inball_diameters()))
        raise MeshError(f"grading violates shape-regularity cap: sigma={sigma:.2f} "
                        f"at element {worst}")
    return Mesh(2, mesh.vertices, mesh.elements, domain=domain,
                boundary_flags=mesh.boundary_flags, circle_id=mesh.circle_id,
                element_tags=mesh.element_tags, h_global=h, mu=mu)


def _graded_interval(domain, h, mu):
    a, b = domain.interval
    half = 0.5 * (b - a)
    k = max(1, int(np.ceil(1.0 / h)))
    t = (np.arange(k + 1) / k) ** mu
    left = a + half * t
    right = b - half * t[::-1]
    x = np.unique(np.concatenate([left, right]))
    verts = x[:, None]
    el = np.column_stack([np.arange(len(x) - 1), np.arange(1, len(x))])
    return Mesh(1, verts, el, domain=domain, h_global=h, mu=mu)


def bisect(mesh, marked):
    """Conforming longest-edge (Rivara) bisection of the marked elements."""
    if mesh.dim == 1:
        return _bisect_1d(mesh, marked)
    verts = [v for v in mesh.vertices]
    els = [tuple(e) for e in mesh.elements]
    tags = list(mesh.element_tags)
    cid = list(mesh.circle_id)
    alive = [True] * len(els)
    parent_edges = []
    edge_map = {}

    def register(e):
        a, b, c = els[e]
        for u, v in ((a, b), (b, c), (c, a)):
            edge_map.setdefault((min(u, v), max(u, v)), set()).add(e)

    def unregister(e):
        a, b, c = els[e]
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            edge_map[key].discard(e)

    for e in range(len(els)):
        register(e)

    def longest_edge(e):
        a, b, c = els[e]
        best, blen = None, -1.0
        for u, v in ((a, b), (b, c), (c, a)):
            ln = float(np.linalg.norm(np.asarray(verts[u]) - np.asarray(verts[v])))
            # deterministic tie-break by vertex index
            key = (ln, -min(u, v), -max(u, v))
            if best is None or key > (blen, -min(best), -max(best)):
                best, blen = (min(u, v), max(u, v)), ln
        return best

    midpoints = {}

    def split(e, edge):
        u, v = edge
        if edge not in midpoints:
            mid = 0.5 * (np.asarray(verts[u]) + np.asarray(verts[v]))
            mcid = -1
            dom = mesh.domain
            if dom is not None and dom.circles and cid[u] >= 0 and cid[u] == cid[v]:
                mid = dom.circles[cid[u]].project(mid)
                mcid = cid[u]
            verts.append(mid)
            cid.append(mcid)
            parent_edges.append((u, v))
            midpoints[edge] = len(verts) - 1
        m = midpoints[edge]
        a, b, c = els[e]
        other = [w for w in (a, b, c) if w not in edge][0]
        unregister(e)
        alive[e] = False
        for w in edge:
            # keep parent orientation: order (other, w, m) consistently
            tri = _oriented(verts, (other, w, m))
            els.append(tri)
            tags.append(tags[e])
            alive.append(True)
            register(len(els) - 1)
        return len(els) - 2, len(els) - 1

    stack = [int(e) for e in marked]
    guard = 0
    while stack:
        guard += 1
        if guard > 200 * (len(mesh.elements) + len(marked) + 1) + 100000:
            raise MeshError("bisection closure did not terminate")
        e = stack.pop()
        if not alive[e]:
            continue
        edge = longest_edge(e)
        nbrs = [n for n in edge_map[edge] if n != e and alive[n]]
        if not nbrs:
            split(e, edge)
            continue
        n = nbrs[0]
        if longest_edge(n) == edge:
            split(e, edge)
            split(n, edge)
        else:
            stack.append(e)
            stack.append(n)

    keep = [i for i in range(len(els)) if alive[i]]
    new_el = np.array([els[i] for i in keep], dtype=np.int64)
    new_tags = np.array([tags[i] for i in keep], dtype=np.int64)
    return Mesh(2, np.array(verts), new_el, domain=mesh.domain,
                circle_id=np.array(cid, dtype=np.int64), element_tags=new_tags,
                parent=mesh, parent_edges=np.array(parent_edges).reshape(-1, 2),
                h_global=mesh.h_global, mu=mesh.mu)


def _oriented(verts, tri):
    a, b, c = (np.asarray(verts[t]) for t in tri)
    if (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) < 0:
        return (tri[0], tri[2], tri[1])
    return tri


def _bisect_1d(mesh, marked):
    verts = [float(v[0]) for v in mesh.vertices]
    els = [tuple(e) for e in mesh.elements]
    tags = list(mesh.element_tags)
    parent_edges = []
    out_els, out_tags = [], []
    for e, (a, b) in enumerate(els):
        if e in set(int(m) for m in marked):
            verts.append(0.5 * (verts[a] + verts[b]))
            parent_edges.append((a, b))
            m = len(verts) - 1
            out_els += [(a, m), (m, b)]
            out_tags += [tags[e], tags[e]]
        else:
            out_els.append((a, b))
            out_tags.append(tags[e])
    return Mesh(1, np.array(verts)[:, None], np.array(out_els, dtype=np.int64),
                domain=mesh.domain, element_tags=np.array(out_tags),
                parent=mesh, parent_edges=np.array(parent_edges).reshape(-1, 2),
                h_global=mesh.h_global, mu=mesh.mu)


def check_conforming(mesh):
    """Pairwise conformity check: shared closed-set intersections must be
    empty, a common vertex, or a common edge.  Quadratic cost; test use."""
    verts = mesh.vertices
    el = mesh.elements
    cents = mesh.centroids()
    diams = mesh.element_diameters()
    for i in range(len(el)):
        for j in range(i + 1, len(el)):
            if np.linalg.norm(cents[i] - cents[j]) > 0.75 * (diams[i] + diams[j]):
                continue
            shared = set(el[i]) & set(el[j])
            if mesh.dim == 1:
                a0, b0 = sorted(verts[el[i], 0])
                a1, b1 = sorted(verts[el[j], 0])
                overlap = min(b0, b1) - max(a0, a1)
                if overlap > 1e-14 * max(b0 - a0, b1 - a1):
                    return False
                continue
            if not _triangles_conforming(verts[el[i]], verts[el[j]], len(shared)):
                return False
    return True


def _triangles_conforming(t1, t2, n_shared):
    # sample many points of t2; none may lie strictly inside t1 unless the
    # triangles coincide (which positivity of areas rules out)
    rng = np.random.default_rng(0)
    bary = rng.dirichlet((1, 1, 1), size=40)
    pts = bary @ t2
    return not np.any(_inside_triangle(pts, t1, shrink=1e-9))


def _inside_triangle(pts, tri, shrink=0.0):
    a, b, c = tri
    def side(p, q, r):
        return (q[0] - p[0]) * (r[:, 1] - p[1]) - (q[1] - p[1]) * (r[:, 0] - p[0])
    area2 = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    tol = shrink if shrink > 0 else 0.0
    s1 = side(a, b, pts) / area2
    s2 = side(b, c, pts) / area2
    s3 = side(c, a, pts) / area2
    return (s1 > tol) & (s2 > tol) & (s3 > tol)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def interval_domain(a=-1.0, b=1.0):
    return Domain(1, interval=(float(a), float(b)), name="interval")


def square_domain(half=1.0):
    h = float(half)
    poly = np.array([[-h, -h], [h, -h], [h, h], [-h, h]])
    return Domain(2, polygon=poly, name="square")


def disk_domain(radius=1.0, n_boundary=8):
    th = 2 * np.pi * np.arange(n_boundary) / n_boundary
    poly = radius * np.column_stack([np.cos(th), np.sin(th)])
    return Domain(2, polygon=poly, circles=(Circle((0.0, 0.0), radius),), name="disk")


def annulus_domain(r_in=0.5, r_out=1.0, n_boundary=8):
    th = 2 * np.pi * np.arange(n_boundary) / n_boundary
    outer = r_out * np.column_stack([np.cos(th), np.sin(th)])
    # polygon field holds the outer boundary; distances use the circles
    return Domain(2, polygon=outer,
                  circles=(Circle((0.0, 0.0), r_out), Circle((0.0, 0.0), r_in)),
                  name="annulus")


def coarse_mesh(domain, n=8):
    """Coarse preset mesh of a preset domain."""
    if domain.dim == 1:
        a, b = domain.interval
        verts = np.array([[a], [0.5 * (a + b)], [b]])
        el = np.array([[0, 1], [1, 2]])
        return Mesh(1, verts, el, domain=domain)
    if domain.name == "square":
        return _square_mesh(domain, 4)
    if domain.name == "disk":
        r = domain.circles[0].radius
        v, e, c = _fan(r, n, circle=0)
        return Mesh(2, v, e, domain=domain, circle_id=c)
    if domain.name == "annulus":
        r_out = domain.circles[0].radius
        r_in = domain.circles[1].radius
        v, e, c = _ring(r_in, r_out, n, cid_in=1, cid_out=0)
        return Mesh(2, v, e, domain=domain, circle_id=c)
    # generic polygon: fan from the centroid
    poly = domain.polygon
    center = np.mean(poly, axis=0)
    verts = np.vstack([center[None, :], poly])
    nb = len(poly)
    el = np.array([[0, 1 + i, 1 + (i + 1) % nb] for i in range(nb)])
    return Mesh(2, verts, el, domain=domain)


def _square_mesh(domain, n):
    half = np.max(domain.polygon)
    xs = np.linspace(-half, half, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    idx = lambda i, j: i * (n + 1) + j
    els = []
    for i in range(n):
        for j in range(n):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            els += [(a, b, c), (a, c, d)]
    return Mesh(2, verts, np.array(els), domain=domain)


def _fan(radius, n, circle, center=(0.0, 0.0), base_index=0):
    th = 2 * np.pi * np.arange(n) / n
    ring = radius * np.column_stack([np.cos(th), np.sin(th)]) + np.asarray(center)
    verts = np.vstack([np.asarray(center)[None, :], ring])
    el = np.array([[0, 1 + i, 1 + (i + 1) % n] for i in range(n)]) + base_index
    cid = np.concatenate([[-1], np.full(n, circle)])
    return verts, el, cid


def _ring(r_in, r_out, n, cid_in, cid_out):
    th = 2 * np.pi * np.arange(n) / n
    inner = r_in * np.column_stack([np.cos(th), np.sin(th)])
    outer = r_out * np.column_stack([np.cos(th), np.sin(th)])
    verts = np.vstack([inner, outer])
    els = []
    for i in range(n):
        j = (i + 1) % n
        els += [(i, n + i, n + j), (i, n + j, j)]
    cid = np.concatenate([np.full(n, cid_in), np.full(n, cid_out)])
    return verts, np.array(els), cid


# ---------------------------------------------------------------------------
# plain-text mesh format
# ---------------------------------------------------------------------------

def write_mesh(mesh, path):
    with open(path, "w") as f:
        f.write(f"{mesh.dim} {mesh.num_vertices} {mesh.num_elements}\n")
        for v in mesh.vertices:
            f.write(" ".join(repr(float(x)) for x in v) + "\n")
        for e in mesh.elements:
            f.write(" ".join(str(int(i)) for i in e) + "\n")
        f.write(" ".join("1" if b else "0" for b in mesh.boundary_flags) + "\n")


def read_mesh(path, domain=None):
    with open(path) as f:
        dim, nv, ne = (int(t) for t in f.readline().split())
        verts = np.array([[float(t) for t in f.readline().split()] for _ in range(nv)])
        els = np.array([[int(t) for t in f.readline().split()] for _ in range(ne)])
        flags = np.array([t == "1" for t in f.readline().split()])
    return Mesh(dim, verts, els, domain=domain, boundary_flags=flags)
