"""Fractional obstacle problem solved by a primal-dual active set method.

Find u_h >= chi_h (nodal interpolant of the obstacle) minimizing the
fractional energy; equivalently the complementarity system

    lambda = A U - F >= 0,   U >= chi,   lambda_i (U_i - chi_i) = 0.

The primal-dual active set (PDAS) iteration updates

    active_{k+1} = { i : lambda_i + c (chi_i - U_i) > 0 },

solves U = chi on the active set and (A U - F) = 0 on the inactive set,
and stops when the active set repeats; c is the mean diagonal of A.  A
projected-gradient iteration is provided as an independent reference.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import mesh as fmesh
from .assembly import assemble_load, assemble_stiffness, free_nodes
from .quadrature import QuadratureSpec

__all__ = [
    "ObstacleProblem",
    "PdasResult",
    "solve_obstacle_pdas",
    "projected_gradient",
    "complementarity_residual",
    "obstacle_convergence_study",
    "ball_obstacle",
]


def ball_obstacle(pts):
    """Reference obstacle chi(x) = 1/2 - sqrt((x1 - 1/4)^2 + x2^2 / 2)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return 0.5 - np.sqrt((pts[:, 0] - 0.25) ** 2 + 0.5 * pts[:, 1] ** 2)


@dataclass
class ObstacleProblem:
    mesh: object
    s: float
    obstacle: object                  # callable (n, dim) -> (n,)
    f: object = None                  # callable; default 0

    def load(self, free):
        if self.f is None:
            return np.zeros(len(free))
        return assemble_load(self.mesh, self.f, free=free)

    def chi_nodal(self, free):
        return self.obstacle(self.mesh.vertices[free])


@dataclass
class PdasResult:
    values: np.ndarray                # U over the free nodes
    multiplier: np.ndarray            # lambda = A U - F
    active: np.ndarray                # boolean mask over the free nodes
    iterations: int
    converged: bool


def solve_obstacle_pdas(problem, stiffness=None, spec=None, c=None,
                        max_iter=100, x0=None):
    """PDAS iteration for the discrete obstacle problem."""
    spec = spec or QuadratureSpec()
    A = stiffness if stiffness is not None else assemble_stiffness(
        problem.mesh, problem.s, spec)
    M = A.matrix
    F = problem.load(A.free)
    chi = problem.chi_nodal(A.free)
    n = len(F)
    if c is None:
        c = float(np.mean(np.diag(M)))
    if x0 is not None:
        U = np.asarray(x0, dtype=float).copy()
        lam = M @ U - F
    else:
        U = np.linalg.solve(M, F)
        lam = np.zeros(n)
    active = (lam + c * (chi - U)) > 0.0
    seen = set()
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        key = active.tobytes()
        if key in seen:
            converged = True
            break
        seen.add(key)
        U = np.empty(n)
        U[active] = chi[active]
        inact = ~active
        if inact.any():
            rhs = F[inact] - M[np.ix_(inact, active)] @ chi[active]
            U[inact] = np.linalg.solve(M[np.ix_(inact, inact)], rhs)
        lam = M @ U - F
        lam[inact] = 0.0
        new_active = (lam + c * (chi - U)) > 0.0
        if np.array_equal(new_active, active):
            converged = True
            active = new_active
            break
        active = new_active
    return PdasResult(U, lam, active, it, converged)


def complementarity_residual(result, chi):
    """max_i |min(lambda_i, U_i - chi_i)|: zero at an exact solution."""
    return float(np.max(np.abs(np.minimum(result.multiplier,
                                          result.values - chi))))


def projected_gradient(problem, stiffness=None, spec=None, tol=1e-10,
                       max_iter=200000):
    """Reference solver: U <- max(chi, U - tau (A U - F)) with step
    tau = 1 / lambda_max(A) (power iteration estimate)."""
    spec = spec or QuadratureSpec()
    A = stiffness if stiffness is not None else assemble_stiffness(
        problem.mesh, problem.s, spec)
    M = A.matrix
    F = problem.load(A.free)
    chi = problem.chi_nodal(A.free)
    rng = np.random.default_rng(1)
    v = rng.standard_normal(len(F))
    for _ in range(100):
        v = M @ v
        v /= np.linalg.norm(v)
    tau = 1.0 / float(v @ M @ v)
    U = np.maximum(chi, np.zeros_like(F))
    scale = max(1.0, float(np.linalg.norm(F)), float(np.abs(chi).max()))
    for it in range(max_iter):
        Un = np.maximum(chi, U - tau * (M @ U - F))
        if np.max(np.abs(Un - U)) < tol * scale:
            return Un, it + 1
        U = Un
    return U, max_iter


def obstacle_convergence_study(domain, s, levels, mu=2.0, obstacle=None,
                               f=None, spec=None, start_level=1,
                               h_values=None):
    """Energy-norm convergence of the PDAS solution on graded meshes.

    Each level uses a reference solution on the same mesh refined twice
    uniformly (nested, so nodal values transfer by prolongation); the
    error is measured in the energy norm of the reference mesh.  Passing
    h_values overrides the default 2^{-level} meshsize schedule (each
    reference mesh has 16x the level's elements, so explicit coarse h
    sequences keep the study affordable).  Returns a RateTable with
    columns level, h, N, error, rate.
    """
    from .linear import RateTable

    spec = spec or QuadratureSpec()
    obstacle = obstacle or ball_obstacle
    table = RateTable()
    coarse = fmesh.coarse_mesh(domain)
    if h_values is None:
        h_values = [coarse.h_global * 0.5 ** lev
                    for lev in range(start_level, start_level + levels)]
    for lev, h in enumerate(h_values, start=start_level):
        m = fmesh.build_graded(domain, h, mu=mu) if mu != 1.0 else None
        if m is None:
            m = coarse
            while m.h_global > h * 1.0000001:
                m = fmesh.uniform_refine(m)
        prob = ObstacleProblem(m, s, obstacle, f)
        res = solve_obstacle_pdas(prob, spec=spec)

        mref = fmesh.uniform_refine(fmesh.uniform_refine(m))
        P = mref.prolongation() @ mref.parent.prolongation()
        prob_ref = ObstacleProblem(mref, s, obstacle, f)
        Aref = assemble_stiffness(mref, s, spec)
        full = np.zeros(m.num_vertices)
        full[free_nodes(m)] = res.values
        interp = (P @ full)[Aref.free]
        x0 = np.maximum(prob_ref.chi_nodal(Aref.free), interp)
        ref = solve_obstacle_pdas(prob_ref, stiffness=Aref, x0=x0)
        e = ref.values - interp
        err = math.sqrt(max(float(e @ Aref.matrix @ e), 0.0))
        table.add(lev, m.h_global, len(res.values), err)
    return table
