"""Iterative solvers and multilevel preconditioning.

Provides conjugate gradients (optionally preconditioned) with the relative
residual stopping rule ||A x - b|| / ||b|| < tol, a Gauss-Seidel iteration
with the same rule, and an additive multilevel (BPX-type) preconditioner
built from nested mesh hierarchies:

    B = sum_j h_j^{2s-d}  I_j I_j^T,

where I_j maps level-j interior nodal values to the finest level through
composed prolongations.  Lanczos coefficients recorded during CG give Ritz
estimates of the extreme eigenvalues of the (preconditioned) operator.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

__all__ = [
    "SolverOptions",
    "SolveReport",
    "cg",
    "gauss_seidel",
    "BpxPreconditioner",
    "estimate_condition",
    "condition_number",
]


@dataclass
class SolverOptions:
    tol: float = 1e-6
    max_iter: int = 20000
    record_lanczos: bool = True


@dataclass
class SolveReport:
    iterations: int
    converged: bool
    residuals: list = field(default_factory=list)
    ritz_min: float = np.nan
    ritz_max: float = np.nan

    @property
    def ritz_condition(self):
        return self.ritz_max / self.ritz_min


def _as_operator(A):
    if callable(A):
        return A
    return lambda x: A @ x


def cg(A, b, M=None, x0=None, options=None):
    """(Preconditioned) conjugate gradients for SPD A.

    A and M may be arrays or callables; M approximates A^{-1}.  Stops when
    ||b - A x||_2 / ||b||_2 < tol.  Returns (x, SolveReport); the report
    carries Ritz estimates of the extreme eigenvalues of M A from the
    Lanczos tridiagonal assembled out of the CG coefficients.
    """
    opts = options or SolverOptions()
    Aop = _as_operator(A)
    Mop = _as_operator(M) if M is not None else (lambda r: r)
    b = np.asarray(b, dtype=float)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return np.zeros_like(b), SolveReport(0, True, [0.0])
    x = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=float).copy()
    r = b - Aop(x) if x0 is not None else b.copy()
    z = Mop(r)
    p = z.copy()
    rz = float(r @ z)
    residuals = [np.linalg.norm(r) / nb]
    alphas, betas = [], []
    converged = residuals[-1] < opts.tol
    it = 0
    while not converged and it < opts.max_iter:
        Ap = Aop(p)
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        residuals.append(np.linalg.norm(r) / nb)
        it += 1
        if residuals[-1] < opts.tol:
            converged = True
            alphas.append(alpha)
            betas.append(0.0)
            break
        z = Mop(r)
        rz_new = float(r @ z)
        beta = rz_new / rz
        p = z + beta * p
        rz = rz_new
        alphas.append(alpha)
        betas.append(beta)
    report = SolveReport(it, converged, residuals)
    if opts.record_lanczos and len(alphas) >= 2:
        report.ritz_min, report.ritz_max = _ritz_extremes(alphas, betas)
    return x, report


def _ritz_extremes(alphas, betas):
    """Extreme eigenvalues of the Lanczos tridiagonal recovered from the CG
    step sizes alpha_k and orthogonalization coefficients beta_k."""
    k = len(alphas)
    diag = np.empty(k)
    off = np.empty(max(k - 1, 0))
    diag[0] = 1.0 / alphas[0]
    for j in range(1, k):
        diag[j] = 1.0 / alphas[j] + betas[j - 1] / alphas[j - 1]
        off[j - 1] = np.sqrt(max(betas[j - 1], 0.0)) / alphas[j - 1]
    if k == 1:
        return diag[0], diag[0]
    w = sla.eigh_tridiagonal(diag, off, eigvals_only=True)
    return float(w[0]), float(w[-1])


def gauss_seidel(A, b, x0=None, options=None):
    """Forward Gauss-Seidel: x <- x + L^{-1}(b - A x) with L the lower
    triangle of A including the diagonal.  Same stopping rule as cg."""
    opts = options or SolverOptions()
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return np.zeros_like(b), SolveReport(0, True, [0.0])
    x = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=float).copy()
    L = np.tril(A)
    r = b - A @ x
    residuals = [np.linalg.norm(r) / nb]
    it = 0
    while residuals[-1] >= opts.tol and it < opts.max_iter:
        x += sla.solve_triangular(L, r, lower=True)
        r = b - A @ x
        residuals.append(np.linalg.norm(r) / nb)
        it += 1
    return x, SolveReport(it, residuals[-1] < opts.tol, residuals)


class BpxPreconditioner:
    """Additive multilevel preconditioner on the interior nodes of the
    finest mesh of a nested hierarchy.

    apply(r) = sum_j h_j^{2s-d} I_j I_j^T r, where I_j composes the
    prolongations from level j to the finest level and restricts them to
    interior (non-boundary) nodes on both ends.  The finest-level term is
    h_J^{2s-d} times the identity.
    """

    def __init__(self, hierarchy, s):
        meshes = list(getattr(hierarchy, "levels", hierarchy))
        if len(meshes) < 1:
            raise ValueError("empty hierarchy")
        self.s = float(s)
        d = meshes[-1].dim
        fine_free = ~meshes[-1].boundary_flags
        ops = []
        scales = []
        P = sp.identity(meshes[-1].num_vertices, format="csr")
        for j in range(len(meshes) - 1, -1, -1):
            m = meshes[j]
            free_j = ~m.boundary_flags
            Ij = P[fine_free][:, free_j].tocsr()
            ops.append(Ij)
            scales.append(m.h_global ** (2.0 * self.s - d))
            if j > 0:
                P = P @ meshes[j].prolongation()
        self._ops = ops
        self._scales = scales
        self.n = int(fine_free.sum())

    def apply(self, r):
        out = np.zeros_like(r)
        for Ij, c in zip(self._ops, self._scales):
            out += c * (Ij @ (Ij.T @ r))
        return out

    def __call__(self, r):
        return self.apply(r)


def estimate_condition(A, M=None, n_iter=120, seed=0):
    """Ritz estimate of cond(M A) from a CG run on a random right-hand side
    driven to (near) machine precision or n_iter iterations."""
    n = A.shape[0]
    rng = np.random.default_rng(seed)
    b = rng.standard_normal(n)
    opts = SolverOptions(tol=1e-14, max_iter=n_iter)
    _, rep = cg(A, b, M=M, options=opts)
    return rep.ritz_condition


def condition_number(A):
    """Exact spectral condition number of a symmetric matrix."""
    w = sla.eigvalsh(np.asarray(A, dtype=float))
    return float(w[-1] / w[0])
