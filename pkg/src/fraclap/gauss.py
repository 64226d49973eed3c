"""Gauss rules on [0,1] and on the unit simplex (collapsed-square Duffy rule)."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss01(n):
    """n-point Gauss-Legendre rule on [0,1]; weights sum to 1."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def duffy_triangle(n):
    """n*n-point rule on the unit simplex {x,y >= 0, x+y <= 1}.

    Built by collapsing a tensor Gauss rule; weights sum to 1/2 (the
    simplex measure)."""
    x, w = gauss01(n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    WX, WY = np.meshgrid(w, w, indexing="ij")
    u = X.ravel()
    v = (Y * (1.0 - X)).ravel()
    wt = (WX * WY * (1.0 - X)).ravel()
    return u, v, wt


@lru_cache(maxsize=None)
def simplex_rule(dim, n):
    """Barycentric quadrature points/weights for the reference simplex.

    Returns (bary (npts, dim+1), weights); weights sum to 1 so a physical
    integral is |T| * sum(w_i * f(x_i))."""
    if dim == 1:
        x, w = gauss01(n)
        bary = np.column_stack([1.0 - x, x])
        return bary, w.copy()
    u, v, wt = duffy_triangle(n)
    bary = np.column_stack([1.0 - u - v, u, v])
    return bary, 2.0 * wt


def _perms3(a, b, c):
    out = {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}
    return sorted(out)


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Compact symmetric triangle rules, barycentric, weights sum to 1.

    Exact for polynomials up to the stated degree with far fewer points
    than a collapsed tensor rule; used for well-separated element pairs."""
    if degree <= 2:
        pts = _perms3(0.5, 0.5, 0.0)
        w = [1.0 / 3.0] * 3
    elif degree <= 4:
        pts, w = [], []
        for a, wt in (((0.108103018168070, 0.445948490915965), 0.223381589678011),
                      ((0.816847572980459, 0.091576213509771), 0.109951743655322)):
            p = _perms3(a[0], a[1], a[1])
            pts += p
            w += [wt] * len(p)
    else:
        pts = [(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)]
        w = [0.225]
        for a, wt in (((0.059715871789770, 0.470142064105115), 0.132394152788506),
                      ((0.797426985353087, 0.101286507323456), 0.125939180544827)):
            p = _perms3(a[0], a[1], a[1])
            pts += p
            w += [wt] * len(p)
    bary = np.array(pts, dtype=float)
    w = np.array(w, dtype=float)
    return bary, w / w.sum()
