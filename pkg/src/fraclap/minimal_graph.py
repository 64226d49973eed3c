"""Fractional minimal graphs: nonlinear energy, Newton solver, geometry.

For s in (0, 1/2), the nonlocal minimal graph u on Omega with exterior
datum g minimizes

    I_s[u] = iint_{Q_Omega} F_s(d_u(x,y)) |x-y|^{1-d-2s} dx dy,
    d_u(x,y) = (u(x) - u(y)) / |x-y|,
    F_s(rho) = int_0^rho (rho - r) (1 + r^2)^{-(d+1+2s)/2} dr,

where Q_Omega collects all ordered pairs with at least one point in
Omega.  The first variation carries the weight G_s = F_s' (equivalently
G~_s(rho) = G_s(rho)/rho against a difference quotient), and the Newton
matrix the weight G_s' = (1+rho^2)^{-(d+1+2s)/2}.

Discretization: P1 on a mesh of a container Lambda that fits Omega as a
tagged submesh; nodal values outside Omega are fixed to the datum.  The
integrals over Lambda x Lambda reuse the singular pair quadrature; the
tail beyond Lambda (where the datum vanishes and d_u is small) is closed
by linearizing the weights (G~, G' -> 1, F -> rho^2/2), which reduces all
tails to the complement-weighted mass matrix with exponent 1+2s.  The
next-order Taylor term of the tail is reported as `tail_correction`.

Geometric errors:  e_s(u,v)^2 = C~_{d,s} iint (G_s(d_u) - G_s(d_v))
d_{u-v} |x-y|^{1-d-2s} with C~_{d,s} = (1-2s)/alpha_d (alpha_d = volume
of the unit ball), and its classical limit
e(u,v)^2 = int_Omega (nu(grad u) - nu(grad v)) . (grad(u-v), 0) with the
normal map nu(a) = (a, -1)/sqrt(1+|a|^2); e_s -> e as s -> 1/2.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import mesh as fmesh
from .assembly import complement_mass, pair_matrix
from .kernelfun import weight_exact
from .mesh import Circle, Domain, Mesh
from .quadrature import QuadratureSpec

__all__ = [
    "GraphKernel",
    "kernel_eval",
    "GraphProblem",
    "GraphState",
    "NewtonReport",
    "solve_graph_newton",
    "geometric_error_es",
    "geometric_error_classical",
    "stickiness_indicator",
    "graph_preset",
    "PRESET_NAMES",
    "es_convergence_study",
]

PRESET_NAMES = ("ex-1d-sign", "ex-annulus", "ex-disk-multis")


def _ball_volume(d):
    return {1: 2.0, 2: math.pi}[d]


@dataclass(frozen=True)
class GraphKernel:
    """Kernel weights of the fractional minimal graph energy."""
    d: int
    s: float

    def __post_init__(self):
        if not (0.0 < self.s < 0.5):
            raise ValueError("graph problems require s in (0, 1/2)")

    @property
    def p(self):
        return (self.d + 1.0 + 2.0 * self.s) / 2.0

    @property
    def c_tilde(self):
        """C~_{d,s} = (1-2s)/alpha_d."""
        return (1.0 - 2.0 * self.s) / _ball_volume(self.d)

    def F(self, rho):
        return weight_exact("F", rho, self.p)

    def G(self, rho):
        return weight_exact("G", rho, self.p)

    def Gtilde(self, rho):
        return weight_exact("Gtilde", rho, self.p)

    def Gprime(self, rho):
        return weight_exact("Gprime", rho, self.p)


def kernel_eval(kind, rho, d, s):
    """Evaluate one of the graph weights {F, G, Gtilde, Gprime}."""
    return weight_exact(kind, rho, GraphKernel(d, s).p)


# ---------------------------------------------------------------------------
# problem and state
# ---------------------------------------------------------------------------


class GraphProblem:
    """Minimal-graph problem on a tagged container mesh.

    mesh covers the container Lambda; elements tagged 0 form Omega.  Nodes
    whose every incident element is tagged 0 are free; all other nodes are
    fixed to the datum g.  The datum is implicitly zero outside Lambda.
    """

    def __init__(self, mesh, s, datum, spec=None, name="graph"):
        self.mesh = mesh
        self.s = float(s)
        self.datum = datum
        self.spec = spec or QuadratureSpec()
        self.name = name
        self.kernel = GraphKernel(mesh.dim, self.s)
        incident = np.zeros(mesh.num_vertices, dtype=bool)
        for e, tag in enumerate(mesh.element_tags):
            if tag != 0:
                incident[mesh.elements[e]] = True
        self.free = ~incident
        self._tc = None

    @property
    def beta(self):
        """Exponent of the matrix-mode kernels |x-y|^{-d-beta}."""
        return 1.0 + 2.0 * self.s

    def tail_matrix(self):
        """Complement-weighted mass matrix over the Omega elements,
        exponent 1+2s (linearized tail beyond Lambda)."""
        if self._tc is None:
            self._tc = complement_mass(self.mesh, self.beta,
                                       omega_only=True, spec=self.spec)
        return self._tc

    def initial_state(self):
        vals = np.zeros(self.mesh.num_vertices)
        fixed = ~self.free
        vals[fixed] = np.asarray(self.datum(self.mesh.vertices[fixed]), dtype=float)
        return GraphState(self, vals)

    def with_values(self, values):
        return GraphState(self, np.asarray(values, dtype=float).copy())


@dataclass
class GraphState:
    """Nodal values on the container mesh; fixed nodes never change."""
    problem: GraphProblem
    values: np.ndarray

    @property
    def free(self):
        return self.problem.free

    def replaced(self, free_values):
        vals = self.values.copy()
        vals[self.free] = free_values
        return GraphState(self.problem, vals)


# ---------------------------------------------------------------------------
# energy / residual / Jacobian
# ---------------------------------------------------------------------------


def energy(state):
    """I_s of the state (container pairs + linearized exterior tail)."""
    pr = state.problem
    _, scal = pair_matrix(pr.mesh, 2.0 * pr.s - 1.0, mode=3, spec=pr.spec,
                          u1=state.values, omega_only=True, s=pr.s)
    tc = pr.tail_matrix()
    u = state.values
    return float(scal) + float(u @ tc @ u)


def residual(state):
    """r_i = a_u(u, phi_i) over the free nodes."""
    pr = state.problem
    A, _ = pair_matrix(pr.mesh, pr.beta, mode=2, spec=pr.spec,
                       u1=state.values, omega_only=True, s=pr.s)
    r = A @ state.values + 2.0 * (pr.tail_matrix() @ state.values)
    return r[pr.free]


def jacobian(state, variant="newton"):
    """Newton matrix over the free nodes: weight G' (exact Newton) or
    G~ (fixed-point variant)."""
    pr = state.problem
    mode = 1 if variant == "newton" else 2
    A, _ = pair_matrix(pr.mesh, pr.beta, mode=mode, spec=pr.spec,
                       u1=state.values, omega_only=True, s=pr.s)
    J = A + 2.0 * pr.tail_matrix()
    f = pr.free
    return J[np.ix_(f, f)]


def seminorm_w2s1(state):
    """Discrete W^{2s}_1(Omega) seminorm (integrand |d_u| |x-y|^{1-d-2s});
    the exterior tail uses the nodal interpolant of |u|."""
    pr = state.problem
    _, scal = pair_matrix(pr.mesh, 2.0 * pr.s, mode=5, spec=pr.spec,
                          u1=state.values, omega_only=True, s=pr.s)
    au = np.abs(state.values)
    tail = 2.0 * float(au @ (pr.tail_matrix() @ np.ones_like(au)))
    return float(scal) + tail


def tail_correction(state):
    """Magnitude of the next-order Taylor term dropped by the linearized
    exterior tail: (p/6) int_Omega (Pi_h u^4) cw(x, Lambda, 3+2s) dx."""
    pr = state.problem
    t4 = complement_mass(pr.mesh, 3.0 + 2.0 * pr.s, omega_only=True,
                         spec=pr.spec)
    u4 = state.values ** 4
    return float(pr.kernel.p / 6.0 * (u4 @ (t4 @ np.ones_like(u4))))


# ---------------------------------------------------------------------------
# Newton driver
# ---------------------------------------------------------------------------


@dataclass
class NewtonReport:
    iterations: int
    converged: bool
    energies: list = field(default_factory=list)
    residual_norms: list = field(default_factory=list)
    failure: str = ""


def solve_graph_newton(problem, tol=1e-10, max_iter=50, variant="newton",
                       state=None):
    """Damped Newton: accept the halved step only if the energy strictly
    decreases; report failure below step size 2^-20.  Returns
    (GraphState, NewtonReport)."""
    st = state if state is not None else problem.initial_state()
    rep = NewtonReport(0, False)
    e0 = energy(st)
    rep.energies.append(e0)
    for it in range(1, max_iter + 1):
        r = residual(st)
        rn = float(np.linalg.norm(r))
        rep.residual_norms.append(rn)
        if rn <= tol:
            rep.iterations = it - 1
            rep.converged = True
            return st, rep
        J = jacobian(st, variant=variant)
        delta = np.linalg.solve(J, -r)
        alpha = 1.0
        accepted = False
        while alpha >= 2.0 ** -20:
            trial = st.replaced(st.values[st.free] + alpha * delta)
            e1 = energy(trial)
            if e1 < e0:
                st, e0 = trial, e1
                rep.energies.append(e1)
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            rep.iterations = it
            rep.failure = "line search failed (step below 2^-20)"
            return st, rep
    rep.iterations = max_iter
    rep.failure = "max_iter reached"
    return st, rep


# ---------------------------------------------------------------------------
# geometric errors
# ---------------------------------------------------------------------------


def geometric_error_es(u, v):
    """Nonlocal geometric discrepancy e_s(u, v) of two states on the same
    mesh; the radicand is nonnegative by monotonicity of G_s."""
    pr = u.problem
    if v.problem.mesh is not pr.mesh:
        raise ValueError("states must live on the same mesh")
    _, scal = pair_matrix(pr.mesh, 2.0 * pr.s, mode=4, spec=pr.spec,
                          u1=u.values, u2=v.values, omega_only=True, s=pr.s)
    w = u.values - v.values
    rad = float(scal) + 2.0 * float(w @ (pr.tail_matrix() @ w))
    rad *= pr.kernel.c_tilde
    if rad < 0.0:
        if rad < -1e-12:
            raise ValueError(f"negative e_s radicand {rad:.3e}")
        rad = 0.0
    return math.sqrt(rad)


def _gradients(mesh, values):
    """Constant per-element gradients of a P1 nodal field."""
    coords = mesh.element_coords()
    vals = values[mesh.elements]
    if mesh.dim == 1:
        g = (vals[:, 1] - vals[:, 0]) / (coords[:, 1, 0] - coords[:, 0, 0])
        return g[:, None]
    e1 = coords[:, 1] - coords[:, 0]
    e2 = coords[:, 2] - coords[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    d1 = vals[:, 1] - vals[:, 0]
    d2 = vals[:, 2] - vals[:, 0]
    gx = (d1 * e2[:, 1] - d2 * e1[:, 1]) / det
    gy = (d2 * e1[:, 0] - d1 * e2[:, 0]) / det
    return np.column_stack([gx, gy])


def geometric_error_classical(u, v, form="inner"):
    """Classical geometric discrepancy e(u, v) over the Omega elements.

    form="inner":  int (nu(grad u) - nu(grad v)) . (grad(u-v), 0);
    form="normal": int |nu(grad u) - nu(grad v)|^2 (Q(grad u)+Q(grad v))/2.
    The two agree identically (Q(a) = sqrt(1+|a|^2))."""
    pr = u.problem
    mesh = pr.mesh
    sel = mesh.element_tags == 0
    vols = mesh.element_volumes()[sel]
    gu = _gradients(mesh, u.values)[sel]
    gv = _gradients(mesh, v.values)[sel]
    qu = np.sqrt(1.0 + np.sum(gu * gu, axis=1))
    qv = np.sqrt(1.0 + np.sum(gv * gv, axis=1))
    if form == "inner":
        integ = np.sum((gu / qu[:, None] - gv / qv[:, None]) * (gu - gv), axis=1)
    else:
        nu_u = np.column_stack([gu, -np.ones(len(gu))]) / qu[:, None]
        nu_v = np.column_stack([gv, -np.ones(len(gv))]) / qv[:, None]
        integ = np.sum((nu_u - nu_v) ** 2, axis=1) * 0.5 * (qu + qv)
    return math.sqrt(max(float(np.sum(vols * integ)), 0.0))


def stickiness_indicator(state):
    """Largest gradient magnitude over the first interior element layer
    (Omega elements touching a fixed node); large values indicate a steep
    boundary layer, the discrete footprint of stickiness."""
    pr = state.problem
    mesh = pr.mesh
    fixed = ~pr.free
    layer = (mesh.element_tags == 0) & fixed[mesh.elements].any(axis=1)
    if not layer.any():
        return 0.0
    g = _gradients(mesh, state.values)[layer]
    return float(np.max(np.linalg.norm(g, axis=1)))


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def _rings_mesh(radii, n, inner_fan, name):
    """Concentric-ring triangulation of the disk of radius radii[-1] with
    mesh lines on every radius; circle_id follows the order of radii
    (outermost first in the Domain so boundary handling sees radii[-1])."""
    radii = list(radii)
    circles = tuple(Circle((0.0, 0.0), r) for r in sorted(radii, reverse=True))
    cid_of = {r: k for k, r in enumerate(sorted(radii, reverse=True))}
    th = 2.0 * math.pi * np.arange(n) / n
    ring = np.column_stack([np.cos(th), np.sin(th)])
    verts = [np.zeros((1, 2))] if inner_fan else [radii[0] * ring]
    cid = [np.array([-1])] if inner_fan else [np.full(n, cid_of[radii[0]])]
    for r in (radii if inner_fan else radii[1:]):
        verts.append(r * ring)
        cid.append(np.full(n, cid_of[r]))
    verts = np.vstack(verts)
    cid = np.concatenate(cid)
    els = []
    base = 1 if inner_fan else 0
    if inner_fan:
        for i in range(n):
            els.append((0, 1 + i, 1 + (i + 1) % n))
    nrings = len(radii) if inner_fan else len(radii)
    start = base
    for k in range(nrings - 1):
        lo = start + k * n
        hi = lo + n
        for i in range(n):
            j = (i + 1) % n
            els.append((lo + i, hi + i, hi + j))
            els.append((lo + i, hi + j, lo + j))
    outer_poly = radii[-1] * ring
    dom = Domain(2, polygon=outer_poly, circles=circles, name=name)
    return Mesh(2, verts, np.array(els, dtype=np.int64), domain=dom,
                circle_id=cid)


def _tag_omega(mesh, inside):
    """Set element tag 0 where inside(centroid), 1 elsewhere."""
    c = mesh.centroids()
    mesh.element_tags = np.where(inside(c), 0, 1).astype(np.int64)
    return mesh


def graph_preset(name, level=0, s=0.25, spec=None):
    """Named example problems.

    ex-1d-sign:     Omega = (-1,1), g = sign(x), Lambda = [-2,2]
    ex-annulus:     Omega = B_1 minus closed B_{1/2}, g = 1 on B_{1/2},
                    Lambda = B_{3/2}
    ex-disk-multis: Omega = B_1, g = 1 on B_{3/2} minus B_1, Lambda = B_2
    """
    if name == "ex-1d-sign":
        dom = fmesh.interval_domain(-2.0, 2.0)
        verts = np.linspace(-2.0, 2.0, 5)[:, None]
        els = np.column_stack([np.arange(4), np.arange(1, 5)])
        m = Mesh(1, verts, els, domain=dom)
        _tag_omega(m, lambda c: np.abs(c[:, 0]) < 1.0)
        for _ in range(level):
            m = fmesh.uniform_refine(m)
        datum = lambda p: np.sign(np.atleast_2d(p)[:, 0])
        return GraphProblem(m, s, datum, spec=spec, name=name)
    if name == "ex-annulus":
        m = _rings_mesh([0.5, 1.0, 1.5], 8, inner_fan=True, name="graph-annulus")
        r = lambda c: np.linalg.norm(c, axis=1)
        _tag_omega(m, lambda c: (r(c) > 0.5) & (r(c) < 1.0))
        for _ in range(level):
            m = fmesh.uniform_refine(m)
        datum = lambda p: (np.linalg.norm(np.atleast_2d(p), axis=1)
                           <= 0.5 + 1e-12).astype(float)
        return GraphProblem(m, s, datum, spec=spec, name=name)
    if name == "ex-disk-multis":
        m = _rings_mesh([1.0, 1.5, 2.0], 8, inner_fan=True, name="graph-disk")
        r = lambda c: np.linalg.norm(c, axis=1)
        _tag_omega(m, lambda c: r(c) < 1.0)
        for _ in range(level):
            m = fmesh.uniform_refine(m)

        def datum(p):
            rr = np.linalg.norm(np.atleast_2d(p), axis=1)
            return ((rr >= 1.0 - 1e-12) & (rr <= 1.5 + 1e-12)).astype(float)

        return GraphProblem(m, s, datum, spec=spec, name=name)
    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def es_convergence_study(s, levels, start_level=2, spec=None, tol=1e-10):
    """Coarse-vs-fine e_s on the 1D sign-datum problem.

    For each level, solves on the level mesh and on its dyadic refinement,
    interpolates the coarse solution onto the fine mesh (exact for P1),
    and records e_s between the two fine-mesh states."""
    from .linear import RateTable

    table = RateTable()
    for lev in range(start_level, start_level + levels):
        pc = graph_preset("ex-1d-sign", level=lev, s=s, spec=spec)
        pf = graph_preset("ex-1d-sign", level=lev + 1, s=s, spec=spec)
        uc, rc = solve_graph_newton(pc, tol=tol)
        uf, rf = solve_graph_newton(pf, tol=tol)
        if not (rc.converged and rf.converged):
            raise RuntimeError("Newton did not converge in e_s study")
        fine_mesh = pf.mesh
        P = _interval_interp(pc.mesh, fine_mesh)
        uc_fine = pf.with_values(P @ uc.values)
        err = geometric_error_es(uf, uc_fine)
        table.add(lev, pc.mesh.h_global, int(pc.free.sum()), err)
    return table


def _interval_interp(coarse, fine):
    """P1 interpolation matrix between nested 1D meshes (exact)."""
    import scipy.sparse as sp

    xc = coarse.vertices[:, 0]
    order = np.argsort(xc)
    xs = xc[order]
    xf = fine.vertices[:, 0]
    idx = np.clip(np.searchsorted(xs, xf, side="right") - 1, 0, len(xs) - 2)
    x0 = xs[idx]
    x1 = xs[idx + 1]
    t = np.clip((xf - x0) / (x1 - x0), 0.0, 1.0)
    rows = np.repeat(np.arange(len(xf)), 2)
    cols = np.column_stack([order[idx], order[idx + 1]]).ravel()
    vals = np.column_stack([1.0 - t, t]).ravel()
    return sp.csr_matrix((vals, (rows, cols)),
                         shape=(len(xf), len(xs))).toarray()
