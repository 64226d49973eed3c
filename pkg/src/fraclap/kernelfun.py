"""The one-parameter integral family Phi_p(t) = int_0^t (1+w^2)^(-p) dw.

Phi_p underlies everything kernel-shaped in this package:
  * the minimal-graph weight G_s = Phi_p with p = (d+1+2s)/2, from which
    F_s, G~_s and G'_s follow in closed form,
  * the per-segment closed form of the complement (exterior) integral,
    with p = 1 + beta/2.

Evaluation is exact (hypergeometric / adaptive quadrature) at the Python
level; hot loops use a cubic-interpolation table on an asinh grid with an
asymptotic expansion beyond the table (see _core).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

TABLE_SIZE = 16385
TABLE_TMAX = 1.0e4


def phi_exact(t, p):
    """Phi_p(t) via the hypergeometric closed form (vectorized)."""
    t = np.asarray(t, dtype=float)
    return t * special.hyp2f1(0.5, p, 1.5, -t * t)


def phi_quad(t, p):
    """Independent adaptive-quadrature evaluation (scalar; for validation)."""
    val, _ = integrate.quad(lambda w: (1.0 + w * w) ** (-p), 0.0, float(t),
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def phi_infinity(p):
    """Phi_p(inf) = sqrt(pi) Gamma(p-1/2) / (2 Gamma(p))."""
    return math.sqrt(math.pi) * math.gamma(p - 0.5) / (2.0 * math.gamma(p))


@dataclass(frozen=True)
class PhiTable:
    """Cubic-interpolation table of Phi_p on an asinh grid.

    Fields are plain floats/arrays so they can be passed straight into
    numba kernels."""
    p: float
    dx: float
    vals: np.ndarray      # Phi_p(sinh(i*dx)), i = 0..n-1
    inf: float            # Phi_p(inf)
    tmax: float           # switch to the asymptotic series beyond this

    def as_args(self):
        return self.p, self.dx, self.vals, self.inf, self.tmax


_table_cache = {}


def phi_table(p, n=TABLE_SIZE, tmax=TABLE_TMAX):
    key = (round(float(p), 14), n, tmax)
    if key not in _table_cache:
        xmax = math.asinh(tmax)
        x = np.linspace(0.0, xmax, n)
        vals = phi_exact(np.sinh(x), p)
        _table_cache[key] = PhiTable(float(p), xmax / (n - 1),
                                     np.ascontiguousarray(vals),
                                     phi_infinity(p), float(tmax))
    return _table_cache[key]


# ---------------------------------------------------------------------------
# reference (slow, exact) evaluation of the derived weights; the fast
# table-driven versions live in _core and must agree with these.
# ---------------------------------------------------------------------------

def weight_exact(kind, rho, p):
    """kind in {F, G, Gtilde, Gprime}; scalar or array rho."""
    rho = np.asarray(rho, dtype=float)
    if kind == "G":
        return phi_exact(rho, p)
    if kind == "Gprime":
        return (1.0 + rho * rho) ** (-p)
    if kind == "Gtilde":
        out = np.ones_like(rho)
        nz = np.abs(rho) > 1e-8
        out[nz] = phi_exact(rho[nz], p) / rho[nz]
        small = ~nz
        r2 = rho[small] ** 2
        out[small] = 1.0 - p * r2 / 3.0
        return out
    if kind == "F":
        return rho * phi_exact(rho, p) - ((1.0 + rho * rho) ** (1.0 - p) - 1.0) / (2.0 * (1.0 - p))
    raise ValueError(f"unknown kind {kind!r}")
