"""Linear Dirichlet problem for the integral fractional Laplacian.

Solves (-Delta)^s u = f in Omega, u = 0 in the complement, with P1
elements, and measures convergence in the energy norm against problems
with a known exact solution.  The reference family is f = 1 on the unit
ball B_1 in R^d, whose solution is

    u(x) = gamma_{d,s} (1 - |x|^2)_+^s,
    gamma_{d,s} = Gamma(d/2) / (2^{2s} Gamma((d+2s)/2) Gamma(1+s)),

with exact energy pairing

    <f, u> = int_{B_1} u
           = pi / (2^{2s} Gamma(1+s)^2 (s+1))                  (d = 2)
           = pi / (2^{2s} Gamma(s+1/2) Gamma(s+3/2))           (d = 1).

Galerkin orthogonality then gives the computable energy error
|u - u_h|_s^2 = <f, u> - F^T U.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import mesh as fmesh
from .assembly import (NodalField, ROLE_FREE, ROLE_FIXED_ZERO,
                       assemble_load, assemble_stiffness, free_nodes)
from .quadrature import QuadratureSpec

__all__ = [
    "GetoorSolution",
    "solve_dirichlet",
    "energy_error_exact",
    "RateTable",
    "convergence_study",
]


@dataclass
class GetoorSolution:
    """Exact solution of (-Delta)^s u = 1 on the unit ball."""
    d: int
    s: float

    @property
    def gamma(self):
        d, s = self.d, self.s
        return (math.gamma(d / 2.0)
                / (4.0 ** s * math.gamma((d + 2.0 * s) / 2.0) * math.gamma(1.0 + s)))

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r2 = np.sum(pts * pts, axis=1)
        return self.gamma * np.clip(1.0 - r2, 0.0, None) ** self.s

    @property
    def pairing(self):
        """<f, u> = int_{B_1} u for f = 1."""
        s = self.s
        if self.d == 2:
            return math.pi / (4.0 ** s * math.gamma(1.0 + s) ** 2 * (s + 1.0))
        if self.d == 1:
            return math.pi / (4.0 ** s * math.gamma(s + 0.5) * math.gamma(s + 1.5))
        raise ValueError("only d = 1, 2")


def solve_dirichlet(mesh, s, f, spec=None, stiffness=None):
    """P1 Galerkin solution of (-Delta)^s u = f, u = 0 outside Omega.

    Returns (field, stiffness, load): the solution as a NodalField over all
    mesh vertices (zero on the boundary), the assembled StiffnessMatrix,
    and the free-node load vector.
    """
    spec = spec or QuadratureSpec()
    A = stiffness if stiffness is not None else assemble_stiffness(mesh, s, spec)
    F = assemble_load(mesh, f, free=A.free)
    U = np.linalg.solve(A.matrix, F)
    roles = np.where(mesh.boundary_flags, ROLE_FIXED_ZERO, ROLE_FREE)
    field = NodalField.zeros(mesh, roles)
    field.values[A.free] = U
    return field, A, F


def energy_error_exact(pairing, F, U):
    """Energy-norm error |u - u_h|_s from Galerkin orthogonality:
    error^2 = <f, u> - F^T U.  Small negative round-off is clipped."""
    err2 = float(pairing) - float(np.asarray(F) @ np.asarray(U))
    if err2 < 0.0:
        if err2 < -1e-10 * abs(float(pairing)):
            raise ValueError(f"negative energy error^2 = {err2:.3e}")
        err2 = 0.0
    return math.sqrt(err2)


@dataclass
class RateTable:
    """Convergence history: one row per refinement level."""
    columns: tuple = ("level", "h", "N", "error", "rate")
    rows: list = field(default_factory=list)

    def add(self, level, h, n, error):
        rate = np.nan
        if self.rows:
            _, h0, _, e0, _ = self.rows[-1]
            if e0 > 0 and error > 0 and h0 != h:
                rate = math.log(e0 / error) / math.log(h0 / h)
        self.rows.append((int(level), float(h), int(n), float(error), float(rate)))

    def fitted_rate(self, last=None):
        """Least-squares slope of log(error) against log(h) over the last
        rows (default: all but the first when >= 4 rows exist)."""
        rows = [r for r in self.rows if r[3] > 0]
        if last is None:
            last = max(3, len(rows) - 1)
        rows = rows[-last:]
        if len(rows) < 2:
            return np.nan
        lh = np.log([r[1] for r in rows])
        le = np.log([r[3] for r in rows])
        return float(np.polyfit(lh, le, 1)[0])

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.columns) + "\n")
            for lev, h, n, err, rate in self.rows:
                fh.write(f"{lev},{h:.12g},{n},{err:.12g},{rate:.12g}\n")

    def __str__(self):
        lines = ["%6s %12s %8s %14s %8s" % self.columns]
        for lev, h, n, err, rate in self.rows:
            lines.append("%6d %12.6g %8d %14.8g %8.4f" % (lev, h, n, err, rate))
        return "\n".join(lines)


def convergence_study(domain, s, levels, mu=1.0, spec=None, start_level=1,
                      f=None, pairing=None, callback=None, ratio=0.5):
    """Energy-error convergence on the unit-ball reference problem.

    mu = 1 runs uniform refinements of the coarse mesh; mu > 1 builds
    boundary-graded meshes with grading exponent mu and matched meshsize
    parameter h = ratio^level * h0 (graded meshes grow quickly with 1/h,
    so a gentler ratio such as 2^{-1/2} keeps studies affordable).
    Errors use the exact energy pairing."""
    spec = spec or QuadratureSpec()
    if f is None:
        f = lambda p: np.ones(len(p))
    if pairing is None:
        pairing = GetoorSolution(domain.dim, s).pairing
    table = RateTable()
    coarse = fmesh.coarse_mesh(domain)
    mesh = coarse
    for lev in range(start_level + levels):
        if mu == 1.0:
            if lev > 0:
                mesh = fmesh.uniform_refine(mesh)
        else:
            h = coarse.h_global * ratio ** lev
            mesh = fmesh.build_graded(domain, h, mu=mu)
        if lev < start_level:
            continue
        A = assemble_stiffness(mesh, s, spec)
        F = assemble_load(mesh, f, free=A.free)
        U = np.linalg.solve(A.matrix, F)
        err = energy_error_exact(pairing, F, U)
        table.add(lev, mesh.h_global, len(F), err)
        if callback is not None:
            callback(lev, mesh, A, F, U, err)
    return table
