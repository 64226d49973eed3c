"""Sinc-quadrature (Dunford-Taylor) realization of the fractional form.

The bilinear form of the integral fractional Laplacian admits the
Balakrishnan-type representation

    <(-Delta)^s u, v> = (2 sin(s pi) / pi)
        int_0^inf t^{-2s-1} ( u - w(t), v )_{L^2}  dt,

where w(t) = (I - t^2 Delta)^{-1} u solves the reaction-diffusion problem
w - t^2 Delta w = u on all of R^d.  Substituting t = e^{-y/2} and applying
the sinc rule with nodes y_j = j k, j = -N..N, gives

    a^N(u, v) = (sin(s pi) k / pi) sum_j e^{s y_j} ( u - w_j, v ),

which converges exponentially in N.  Each w_j is computed with P1 elements
on the computational interval extended to the truncated ball

    B^M(t) = [inf Omega - r, sup Omega + r],   r = 1 + M * max(t, 1),

with zero Dirichlet values at the truncation endpoints and geometrically
growing exterior cells (ratio 1.5).  The resulting operator application is
used matrix-free inside conjugate gradients; it approximates but does not
reproduce the Galerkin operator, so errors are measured with the
nonconforming identity |u - u~|_s^2 ~ <f,u> - 2 F.U~ + U~^T A U~.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .assembly import assemble_load, assemble_stiffness, free_nodes
from .linear import GetoorSolution, RateTable, energy_error_exact
from .solve import SolverOptions, cg

__all__ = [
    "SincGrid",
    "sinc_scalar_check",
    "TruncatedProblem",
    "DtOperator",
    "solve_dt",
    "dt_convergence_study",
    "default_sinc_size",
]


@dataclass
class SincGrid:
    """Sinc nodes y_j = j k, j = -N..N, for the Balakrishnan integral."""
    s: float
    N: int
    k: float = None

    def __post_init__(self):
        if self.k is None:
            self.k = 1.0 / math.sqrt(self.N)
        j = np.arange(-self.N, self.N + 1)
        self.y = j * self.k
        self.t = np.exp(-0.5 * self.y)
        self.weights = self.k * np.exp(self.s * self.y)
        self.prefactor = math.sin(self.s * math.pi) / math.pi


def sinc_scalar_check(s, N, k=None):
    """Sinc approximation of int_0^inf tau^{1-2s}/(1+tau^2) dtau, whose
    exact value is pi / (2 sin(s pi)).  Converges exponentially in N."""
    g = SincGrid(s, N, k)
    t2 = g.t ** 2
    return 0.5 * float(np.sum(g.weights * t2 / (1.0 + t2)))


def sinc_scalar_target(s):
    return math.pi / (2.0 * math.sin(s * math.pi))


def _tri_matvec(diag, off, x):
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    return y


class TruncatedProblem:
    """One reaction-diffusion solve (I - t^2 Delta) w = u on B^M(t), 1D.

    The grid keeps every vertex of the interior mesh and extends past each
    endpoint with cells growing geometrically (ratio 1.5) from the local
    boundary cell size, out to distance r; w vanishes at the two outermost
    nodes.  The factorized system is reused across operator applications.
    """

    RATIO = 1.5

    def __init__(self, interior_x, r):
        xi = np.sort(np.asarray(interior_x, dtype=float).ravel())
        left = self._extension(xi[1] - xi[0], r)
        right = self._extension(xi[-1] - xi[-2], r)
        x = np.concatenate([xi[0] - left[::-1], xi, xi[-1] + right])
        self.x = x
        self.n = len(x)
        self.offset = len(left)            # index of interior_x[0] in x
        h = np.diff(x)
        self.mass_diag = np.zeros(self.n)
        self.mass_diag[:-1] += h / 3.0
        self.mass_diag[1:] += h / 3.0
        self.mass_off = h / 6.0
        self.stiff_diag = np.zeros(self.n)
        self.stiff_diag[:-1] += 1.0 / h
        self.stiff_diag[1:] += 1.0 / h
        self.stiff_off = -1.0 / h
        self._factors = {}

    @staticmethod
    def _extension(h0, r):
        """Cumulative exterior offsets 0 < c_1 < ... <= r with geometric
        cell growth; the last node is snapped to exactly r."""
        out = []
        c, step = 0.0, h0
        while c < r - 1e-12 * (1.0 + r):
            c = min(c + step, r)
            out.append(c)
            step *= TruncatedProblem.RATIO
        return np.array(out)

    def _factor(self, t2):
        key = float(t2)
        f = self._factors.get(key)
        if f is None:
            # unknowns: all nodes except the two truncation endpoints
            d = self.mass_diag[1:-1] + t2 * self.stiff_diag[1:-1]
            e = self.mass_off[1:-1] + t2 * self.stiff_off[1:-1]
            ab = np.zeros((2, len(d)))
            ab[0, 1:] = e
            ab[1] = d
            f = cholesky_banded(ab)
            self._factors[key] = f
        return f

    def residual_mass(self, u_int, t2):
        """M (u - w) on the full extended grid, where u is the interior
        nodal vector extended by zero and w solves (M + t^2 K) w = M u."""
        u = np.zeros(self.n)
        u[self.offset:self.offset + len(u_int)] = u_int
        b = _tri_matvec(self.mass_diag, self.mass_off, u)
        w = np.zeros(self.n)
        w[1:-1] = cho_solve_banded((self._factor(t2), False), b[1:-1])
        return _tri_matvec(self.mass_diag, self.mass_off, u - w)


class DtOperator:
    """Matrix-free application of the sinc-quadrature fractional form on
    the free (interior) nodes of a 1D mesh."""

    def __init__(self, mesh, s, N, M, k=None):
        if mesh.dim != 1:
            raise ValueError("sinc-quadrature operator is one-dimensional")
        self.mesh = mesh
        self.s = float(s)
        self.grid = SincGrid(self.s, int(N), k)
        self.M = int(M)
        order = np.argsort(mesh.vertices[:, 0])
        self.order = order
        x = mesh.vertices[order, 0]
        free = free_nodes(mesh)
        gmap = np.full(mesh.num_vertices, -1, dtype=np.int64)
        gmap[free] = np.arange(len(free))
        self.free_sorted = gmap[order]       # free-vector index per sorted node
        self.n_free = len(free)
        self._problems = {}
        self._x = x
        self._radii = 1.0 + self.M * np.maximum(self.grid.t, 1.0)

    def _problem(self, r):
        key = round(float(r), 12)
        pb = self._problems.get(key)
        if pb is None:
            pb = TruncatedProblem(self._x, r)
            self._problems[key] = pb
        return pb

    def apply(self, U):
        """V_i = a^{N,M}(u_h, phi_i) over the free nodes."""
        u_int = np.zeros(len(self._x))
        mask = self.free_sorted >= 0
        u_int[mask] = np.asarray(U)[self.free_sorted[mask]]
        acc = np.zeros(self.n_free)
        g = self.grid
        for wgt, t, r in zip(g.weights, g.t, self._radii):
            pb = self._problem(r)
            m = pb.residual_mass(u_int, t * t)
            mi = m[pb.offset:pb.offset + len(u_int)]
            acc[self.free_sorted[mask]] += wgt * mi[mask]
        return g.prefactor * acc

    def __call__(self, U):
        return self.apply(U)


def default_sinc_size(h):
    """N = ceil(log(1/h)^2), M = ceil(log(1/h))."""
    L = abs(math.log(h))
    return int(math.ceil(L * L)), int(math.ceil(L))


def solve_dt(mesh, s, f, N=None, M=None, k=None, tol=1e-8, max_iter=5000):
    """Solve the Dirichlet problem with the sinc-quadrature operator,
    matrix-free CG.  Returns (U over free nodes, DtOperator, SolveReport).

    When the spacing k is not given it defaults to 2.5/sqrt(N) rather
    than the bare 1/sqrt(N): the sinc window [-kN, kN] must cover the
    resolvent transition of every discretely resolved frequency, which
    sits near y = 2 log(1/h); with N = ceil(log(1/h)^2) this requires
    kN greater than about 2 sqrt(N), otherwise the operator is far too
    weak on the upper part of the spectrum and the solve stalls at a
    mesh-independent error."""
    if N is None or M is None:
        dN, dM = default_sinc_size(mesh.h_global)
        N = N if N is not None else dN
        M = M if M is not None else dM
    if k is None:
        k = 2.5 / math.sqrt(N)
    op = DtOperator(mesh, s, N, M, k)
    F = assemble_load(mesh, f)
    U, rep = cg(op, F, options=SolverOptions(tol=tol, max_iter=max_iter))
    return U, op, rep


def dt_convergence_study(domain, s, levels, start_level=2, spec=None):
    """Energy error of the sinc-quadrature solution on the unit-ball
    reference problem; columns level, h, N (sinc), error, rate."""
    from . import mesh as fmesh

    exact = GetoorSolution(1, s)
    f = lambda p: np.ones(len(p))
    table = RateTable(columns=("level", "h", "N", "error", "rate"))
    m = fmesh.coarse_mesh(domain)
    for lev in range(start_level + levels):
        if lev > 0:
            m = fmesh.uniform_refine(m)
        if lev < start_level:
            continue
        U, op, rep = solve_dt(m, s, f)
        A = assemble_stiffness(m, s, spec)
        F = assemble_load(m, f, free=A.free)
        # nonconforming energy identity (U is not the Galerkin minimizer)
        err2 = exact.pairing - 2.0 * float(F @ U) + float(U @ A.matrix @ U)
        err = math.sqrt(max(err2, 0.0))
        table.add(lev, m.h_global, op.grid.N, err)
    return table
