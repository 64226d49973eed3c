"""Numba kernels: element-pair quadrature and complement integrals.

Touching element pairs (identical / shared edge / shared vertex) are
integrated with Duffy-type difference coordinates in which the integrand
is (positively homogeneous function) x (piecewise-affine overlap factor),
so the radial direction reduces exactly to a Beta-function factor and only
smooth angular integrals are evaluated by Gauss rules (the "angular
tables" built in quadrature.py).  Disjoint pairs use tensor Gauss with
distance-driven subdivision.

Modes (shared by all pair drivers):
  0  matrix, weight 1                (linear stiffness, kernel |x-y|^{-d-beta})
  1  matrix, weight G'(d_u)          (graph Newton matrix, beta = 1+2s)
  2  matrix, weight G~(d_u)          (graph fixed-point matrix, beta = 1+2s)
  3  scalar, F(d_u)                  (graph energy, beta = 2s-1)
  4  scalar, (G(d_u)-G(d_v))*d_{u-v} (geometric error e_s, beta = 2s)
  5  scalar, |u(x)-u(y)|             (W^{2s}_1 seminorm, beta = 2s)

The scalar d_w = (w(x)-w(y))/|x-y| is the difference quotient of a state.
"""

import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# Phi_p(t) = int_0^t (1+w^2)^{-p} dw : cubic table + asymptotics (odd in t)
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always", fastmath=True)
def _phi(t, dx, vals, p, inf, tmax):
    s = 1.0 if t >= 0.0 else -1.0
    at = abs(t)
    if at > tmax:
        q = 2.0 * p
        tail = (at ** (1.0 - q) / (q - 1.0)
                - p * at ** (-1.0 - q) / (q + 1.0)
                + 0.5 * p * (p + 1.0) * at ** (-3.0 - q) / (q + 3.0))
        return s * (inf - tail)
    x = np.log(at + np.sqrt(at * at + 1.0))
    u = x / dx
    n = vals.shape[0]
    j0 = int(u) - 1
    if j0 < 0:
        j0 = 0
    if j0 > n - 4:
        j0 = n - 4
    t0 = u - j0
    c0 = -(t0 - 1.0) * (t0 - 2.0) * (t0 - 3.0) / 6.0
    c1 = t0 * (t0 - 2.0) * (t0 - 3.0) / 2.0
    c2 = -t0 * (t0 - 1.0) * (t0 - 3.0) / 2.0
    c3 = t0 * (t0 - 1.0) * (t0 - 2.0) / 6.0
    return s * (c0 * vals[j0] + c1 * vals[j0 + 1] + c2 * vals[j0 + 2] + c3 * vals[j0 + 3])


@njit(cache=True, inline="always", fastmath=True)
def _gtilde(rho, dx, vals, p, inf, tmax):
    a = abs(rho)
    if a < 1e-3:
        r2 = rho * rho
        return 1.0 - p * r2 / 3.0 + 0.1 * p * (p + 1.0) * r2 * r2
    return _phi(rho, dx, vals, p, inf, tmax) / rho


@njit(cache=True, inline="always", fastmath=True)
def _gprime(rho, p):
    return (1.0 + rho * rho) ** (-p)


@njit(cache=True, inline="always", fastmath=True)
def _ffun(rho, dx, vals, p, inf, tmax):
    return (rho * _phi(rho, dx, vals, p, inf, tmax)
            - ((1.0 + rho * rho) ** (1.0 - p) - 1.0) / (2.0 * (1.0 - p)))


# ---------------------------------------------------------------------------
# mode combination at one quadrature configuration
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always", fastmath=True)
def _accum(mode, base, r, l, nloc, u1l, u2l, dx, vals, p, inf, tmax, Aloc):
    """base already contains weight*radial*Jacobian*kernel; returns the
    scalar-mode contribution and accumulates matrix modes into Aloc."""
    if mode == 0:
        for a in range(nloc):
            la = l[a] * base
            for b in range(nloc):
                Aloc[a, b] += la * l[b]
        return 0.0
    dot1 = 0.0
    for a in range(nloc):
        dot1 += u1l[a] * l[a]
    if mode == 5:
        return base * abs(dot1)
    du = dot1 / r
    if mode == 1 or mode == 2:
        if mode == 1:
            w = _gprime(du, p)
        else:
            w = _gtilde(du, dx, vals, p, inf, tmax)
        bw = base * w
        for a in range(nloc):
            la = l[a] * bw
            for b in range(nloc):
                Aloc[a, b] += la * l[b]
        return 0.0
    if mode == 3:
        return base * _ffun(du, dx, vals, p, inf, tmax)
    # mode 4
    dot2 = 0.0
    for a in range(nloc):
        dot2 += u2l[a] * l[a]
    dv = dot2 / r
    g1 = _phi(du, dx, vals, p, inf, tmax)
    g2 = _phi(dv, dx, vals, p, inf, tmax)
    return base * (g1 - g2) * (du - dv) * r


# ---------------------------------------------------------------------------
# touching pairs
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def _pair_touch(dim, case, xc, tab, rad, beta, mode, u1l, u2l,
                dx, vals, p, inf, tmax, Aloc):
    """xc holds local vertex coordinates in case order:
    identical: [v0,v1,v2]; shared edge: [e0,e1,opp,opp']; shared vertex:
    [c,p1,p2,q1,q2] (2D) / [c,p,q] (1D).  Returns the scalar-mode value;
    matrix modes accumulate into Aloc."""
    acc = 0.0
    km = -float(dim) - beta
    l = np.empty(6)
    if dim == 2:
        if case == 0:
            c1x = xc[1, 0] - xc[0, 0]
            c1y = xc[1, 1] - xc[0, 1]
            c2x = xc[2, 0] - xc[0, 0]
            c2y = xc[2, 1] - xc[0, 1]
            jf = (c1x * c2y - c1y * c2x) ** 2
            for m in range(tab.shape[0]):
                z1 = tab[m, 0]
                z2 = tab[m, 1]
                w = tab[m, 2]
                xx = z1 * c1x + z2 * c2x
                yy = z1 * c1y + z2 * c2y
                r = np.sqrt(xx * xx + yy * yy)
                l[0] = -z1 - z2
                l[1] = z1
                l[2] = z2
                base = w * rad * jf * r ** km
                acc += _accum(mode, base, r, l, 3, u1l, u2l, dx, vals, p, inf, tmax, Aloc)
        elif case == 1:
            ex = xc[1, 0] - xc[0, 0]
            ey = xc[1, 1] - xc[0, 1]
            c1x = xc[2, 0] - xc[0, 0]
            c1y = xc[2, 1] - xc[0, 1]
            c2x = xc[3, 0] - xc[0, 0]
            c2y = xc[3, 1] - xc[0, 1]
            j1 = abs(ex * c1y - ey * c1x)
            j2 = abs(ex * c2y - ey * c2x)
            jf = j1 * j2
            for m in range(tab.shape[0]):
                z1 = tab[m, 0]
                z2 = tab[m, 1]
                z3 = tab[m, 2]
                w = tab[m, 3]
                xx = z1 * ex + z2 * c1x - z3 * c2x
                yy = z1 * ey + z2 * c1y - z3 * c2y
                r = np.sqrt(xx * xx + yy * yy)
                l[0] = -z1 - z2 + z3
                l[1] = z1
                l[2] = z2
                l[3] = -z3
                base = w * rad * jf * r ** km
                acc += _accum(mode, base, r, l, 4, u1l, u2l, dx, vals, p, inf, tmax, Aloc)
        else:
            a1x = xc[1, 0] - xc[0, 0]
            a1y = xc[1, 1] - xc[0, 1]
            a2x = xc[2, 0] - xc[0, 0]
            a2y = xc[2, 1] - xc[0, 1]
            b1x = xc[3, 0] - xc[0, 0]
            b1y = xc[3, 1] - xc[0, 1]
            b2x = xc[4, 0] - xc[0, 0]
            b2y = xc[4, 1] - xc[0, 1]
            jf = abs(a1x * a2y - a1y * a2x) * abs(b1x * b2y - b1y * b2x)
            for m in range(tab.shape[0]):
                z1 = tab[m, 0]
                z2 = tab[m, 1]
                z3 = tab[m, 2]
                z4 = tab[m, 3]
                w = tab[m, 4]
                xx = z1 * a1x + z2 * a2x - z3 * b1x - z4 * b2x
                yy = z1 * a1y + z2 * a2y - z3 * b1y - z4 * b2y
                r = np.sqrt(xx * xx + yy * yy)
                l[0] = z3 + z4 - z1 - z2
                l[1] = z1
                l[2] = z2
                l[3] = -z3
                l[4] = -z4
                base = w * rad * jf * r ** km
                acc += _accum(mode, base, r, l, 5, u1l, u2l, dx, vals, p, inf, tmax, Aloc)
    else:
        if case == 0:
            mcol = xc[1, 0] - xc[0, 0]
            jf = mcol * mcol
            for m in range(tab.shape[0]):
                z = tab[m, 0]
                w = tab[m, 1]
                r = abs(z * mcol)
                l[0] = -z
                l[1] = z
                base = w * rad * jf * r ** km
                acc += _accum(mode, base, r, l, 2, u1l, u2l, dx, vals, p, inf, tmax, Aloc)
        else:
            e1 = xc[1, 0] - xc[0, 0]
            e2 = xc[2, 0] - xc[0, 0]
            jf = abs(e1) * abs(e2)
            for m in range(tab.shape[0]):
                z1 = tab[m, 0]
                z2 = tab[m, 1]
                w = tab[m, 2]
                r = abs(z1 * e1 - z2 * e2)
                l[0] = z2 - z1
                l[1] = z1
                l[2] = -z2
                base = w * rad * jf * r ** km
                acc += _accum(mode, base, r, l, 3, u1l, u2l, dx, vals, p, inf, tmax, Aloc)
    return acc


# ---------------------------------------------------------------------------
# disjoint pairs: tensor Gauss with distance-driven subdivision (DFS stack)
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always", fastmath=True)
def _seg_point_dist(px, py, ax, ay, bx, by):
    vx = bx - ax
    vy = by - ay
    den = vx * vx + vy * vy
    t = 0.0
    if den > 0.0:
        t = ((px - ax) * vx + (py - ay) * vy) / den
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    dx_ = px - (ax + t * vx)
    dy_ = py - (ay + t * vy)
    return np.sqrt(dx_ * dx_ + dy_ * dy_)


@njit(cache=True, fastmath=True)
def _dist_elems(dim, x1, x2):
    """Exact distance between two disjoint simplices (vertex rows of x1, x2)."""
    if dim == 1:
        a0 = min(x1[0, 0], x1[1, 0])
        b0 = max(x1[0, 0], x1[1, 0])
        a1 = min(x2[0, 0], x2[1, 0])
        b1 = max(x2[0, 0], x2[1, 0])
        return max(max(a1 - b0, a0 - b1), 0.0)
    best = 1e300
    for a in range(3):
        for b in range(3):
            c = (b + 1) % 3
            d1 = _seg_point_dist(x1[a, 0], x1[a, 1], x2[b, 0], x2[b, 1], x2[c, 0], x2[c, 1])
            if d1 < best:
                best = d1
            d2 = _seg_point_dist(x2[a, 0], x2[a, 1], x1[b, 0], x1[b, 1], x1[c, 0], x1[c, 1])
            if d2 < best:
                best = d2
    return best


@njit(cache=True, inline="always", fastmath=True)
def _diam(dim, x):
    if dim == 1:
        return abs(x[1, 0] - x[0, 0])
    d01 = np.sqrt((x[1, 0] - x[0, 0]) ** 2 + (x[1, 1] - x[0, 1]) ** 2)
    d12 = np.sqrt((x[2, 0] - x[1, 0]) ** 2 + (x[2, 1] - x[1, 1]) ** 2)
    d20 = np.sqrt((x[0, 0] - x[2, 0]) ** 2 + (x[0, 1] - x[2, 1]) ** 2)
    return max(d01, max(d12, d20))


@njit(cache=True, inline="always", fastmath=True)
def _vol(dim, x):
    if dim == 1:
        return abs(x[1, 0] - x[0, 0])
    return 0.5 * abs((x[1, 0] - x[0, 0]) * (x[2, 1] - x[0, 1])
                     - (x[1, 1] - x[0, 1]) * (x[2, 0] - x[0, 0]))


@njit(cache=True, fastmath=True)
def _pair_disjoint(dim, xc1, xc2, p1inv, p2inv,
                   bary_lo, w_lo, bary_hi, w_hi, near_ratio, max_depth,
                   beta, mode, u1l, u2l, dx, vals, p, inf, tmax, Aloc):
    """Integrate over xc1 x xc2 with hat functions taken from the original
    parent elements (p1inv/p2inv hold [x0, Binv] rows for barycentric
    evaluation at physical points)."""
    acc = 0.0
    km = -float(dim) - beta
    nn = dim + 1
    nloc = 2 * nn
    l = np.empty(6)
    lam1 = np.empty(3)
    lam2 = np.empty(3)
    # DFS stack of sub-element pairs: 2*nn*dim coords + depth
    cap = 2048
    st = np.empty((cap, 2, 3, 2))
    sd = np.empty(cap, dtype=np.int64)
    for a in range(nn):
        for c in range(dim):
            st[0, 0, a, c] = xc1[a, c]
            st[0, 1, a, c] = xc2[a, c]
    sd[0] = 0
    top = 1
    child = np.empty((4, 3, 2))
    while top > 0:
        top -= 1
        depth = sd[top]
        y1 = st[top, 0].copy()
        y2 = st[top, 1].copy()
        h = max(_diam(dim, y1), _diam(dim, y2))
        dist = _dist_elems(dim, y1, y2)
        if dist < near_ratio * h and depth < max_depth and top + 16 < cap:
            # split both into 2^dim children, push all child pairs
            if dim == 1:
                n1 = 2
            else:
                n1 = 4
            for ca in range(n1):
                _split_child(dim, y1, ca, child[0])
                for cb in range(n1):
                    _split_child(dim, y2, cb, child[1])
                    for a in range(nn):
                        for c in range(dim):
                            st[top, 0, a, c] = child[0][a, c]
                            st[top, 1, a, c] = child[1][a, c]
                    sd[top] = depth + 1
                    top += 1
            continue
        if dist < 3.0 * h:
            bary = bary_hi
            bw = w_hi
        else:
            bary = bary_lo
            bw = w_lo
        v1 = _vol(dim, y1)
        v2 = _vol(dim, y2)
        nq = bary.shape[0]
        for q1 in range(nq):
            # physical point in y1
            px = 0.0
            py = 0.0
            for a in range(nn):
                px += bary[q1, a] * y1[a, 0]
                if dim == 2:
                    py += bary[q1, a] * y1[a, 1]
            _parent_bary(dim, px, py, p1inv, lam1)
            wq1 = bw[q1] * v1
            for q2 in range(nq):
                qx = 0.0
                qy = 0.0
                for a in range(nn):
                    qx += bary[q2, a] * y2[a, 0]
                    if dim == 2:
                        qy += bary[q2, a] * y2[a, 1]
                _parent_bary(dim, qx, qy, p2inv, lam2)
                ddx = px - qx
                ddy = py - qy
                r = np.sqrt(ddx * ddx + ddy * ddy)
                for a in range(nn):
                    l[a] = lam1[a]
                    l[nn + a] = -lam2[a]
                base = wq1 * bw[q2] * v2 * r ** km
                acc += _accum(mode, base, r, l, nloc, u1l, u2l,
                              dx, vals, p, inf, tmax, Aloc)
    return acc


@njit(cache=True, inline="always", fastmath=True)
def _split_child(dim, y, k, out):
    if dim == 1:
        m = 0.5 * (y[0, 0] + y[1, 0])
        if k == 0:
            out[0, 0] = y[0, 0]
            out[1, 0] = m
        else:
            out[0, 0] = m
            out[1, 0] = y[1, 0]
        return
    m01x = 0.5 * (y[0, 0] + y[1, 0])
    m01y = 0.5 * (y[0, 1] + y[1, 1])
    m12x = 0.5 * (y[1, 0] + y[2, 0])
    m12y = 0.5 * (y[1, 1] + y[2, 1])
    m20x = 0.5 * (y[2, 0] + y[0, 0])
    m20y = 0.5 * (y[2, 1] + y[0, 1])
    if k == 0:
        out[0, 0] = y[0, 0]; out[0, 1] = y[0, 1]
        out[1, 0] = m01x; out[1, 1] = m01y
        out[2, 0] = m20x; out[2, 1] = m20y
    elif k == 1:
        out[0, 0] = y[1, 0]; out[0, 1] = y[1, 1]
        out[1, 0] = m12x; out[1, 1] = m12y
        out[2, 0] = m01x; out[2, 1] = m01y
    elif k == 2:
        out[0, 0] = y[2, 0]; out[0, 1] = y[2, 1]
        out[1, 0] = m20x; out[1, 1] = m20y
        out[2, 0] = m12x; out[2, 1] = m12y
    else:
        out[0, 0] = m01x; out[0, 1] = m01y
        out[1, 0] = m12x; out[1, 1] = m12y
        out[2, 0] = m20x; out[2, 1] = m20y


@njit(cache=True, inline="always", fastmath=True)
def _parent_bary(dim, px, py, pinv, lam):
    """pinv rows: [x0 (dim), Binv (dim x dim) flattened]."""
    if dim == 1:
        t = (px - pinv[0]) * pinv[1]
        lam[0] = 1.0 - t
        lam[1] = t
        return
    ex = px - pinv[0]
    ey = py - pinv[1]
    l1 = pinv[2] * ex + pinv[3] * ey
    l2 = pinv[4] * ex + pinv[5] * ey
    lam[0] = 1.0 - l1 - l2
    lam[1] = l1
    lam[2] = l2


@njit(cache=True, inline="always", fastmath=True)
def _make_pinv(dim, xc, out):
    if dim == 1:
        out[0] = xc[0, 0]
        out[1] = 1.0 / (xc[1, 0] - xc[0, 0])
        return
    b00 = xc[1, 0] - xc[0, 0]
    b10 = xc[1, 1] - xc[0, 1]
    b01 = xc[2, 0] - xc[0, 0]
    b11 = xc[2, 1] - xc[0, 1]
    det = b00 * b11 - b01 * b10
    out[0] = xc[0, 0]
    out[1] = xc[0, 1]
    out[2] = b11 / det
    out[3] = -b01 / det
    out[4] = -b10 / det
    out[5] = b00 / det


# ---------------------------------------------------------------------------
# pair-loop driver
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def _pair_far(dim, xc1, xc2, bary, bw, beta, mode, u1l, u2l,
              dx, vals, p, inf, tmax, Aloc):
    """Single tensor rule on a well-separated pair (no subdivision; the
    rule barycentrics are the parent hats directly)."""
    nn = dim + 1
    nq = bary.shape[0]
    km2 = -0.5 * (dim + beta)
    v1 = _vol(dim, xc1)
    v2 = _vol(dim, xc2)
    l = np.empty(6)
    acc = 0.0
    for q1 in range(nq):
        px = 0.0
        py = 0.0
        for a in range(nn):
            px += bary[q1, a] * xc1[a, 0]
            if dim == 2:
                py += bary[q1, a] * xc1[a, 1]
        wq1 = bw[q1] * v1
        for q2 in range(nq):
            qx = 0.0
            qy = 0.0
            for a in range(nn):
                qx += bary[q2, a] * xc2[a, 0]
                if dim == 2:
                    qy += bary[q2, a] * xc2[a, 1]
            ddx = px - qx
            ddy = py - qy
            r2 = ddx * ddx + ddy * ddy
            base = wq1 * bw[q2] * v2 * r2 ** km2
            for a in range(nn):
                l[a] = bary[q1, a]
                l[nn + a] = -bary[q2, a]
            acc += _accum(mode, base, np.sqrt(r2), l, 2 * nn, u1l, u2l,
                          dx, vals, p, inf, tmax, Aloc)
    return acc


# distance-to-size ratios switching the disjoint-pair rule ladder
FAR1_RATIO = 8.0
FAR2_RATIO = 15.0


@njit(cache=True)
def pair_loop(dim, verts, elems, tags, omega_only,
              beta, mode,
              tab_id, rad_id, tab_ed, rad_ed, tab_vx, rad_vx,
              bary_lo, w_lo, bary_hi, w_hi,
              bary_f1, w_f1, bary_f2, w_f2,
              near_ratio, max_depth,
              u1, u2, dx, vals, p, inf, tmax,
              gmap, A, pair_factor_distinct):
    """Sum of pair contributions over unordered element pairs.

    Distinct pairs carry the weight pair_factor_distinct (2 when covering
    both integration orders of the symmetric double integral).  Matrix
    modes scatter into A through gmap (entries < 0 are skipped); the
    return value accumulates the scalar modes.

    Disjoint pairs use a rule ladder by (lower-bounded) distance over
    size: subdivision below near_ratio, then the singular rule, then the
    regular rule, then the two far rules beyond FAR1/FAR2_RATIO."""
    ne = elems.shape[0]
    nn = dim + 1
    # element centroids, enclosing radii, diameters (cheap pair screening)
    cx = np.empty(ne)
    cy = np.empty(ne)
    rad = np.empty(ne)
    dia = np.empty(ne)
    xt = np.empty((3, 2))
    for e in range(ne):
        sx = 0.0
        sy = 0.0
        for a in range(nn):
            v = elems[e, a]
            xt[a, 0] = verts[v, 0]
            xt[a, 1] = verts[v, 1] if dim == 2 else 0.0
            sx += xt[a, 0]
            sy += xt[a, 1]
        cx[e] = sx / nn
        cy[e] = sy / nn
        rr = 0.0
        for a in range(nn):
            d2 = (xt[a, 0] - cx[e]) ** 2 + (xt[a, 1] - cy[e]) ** 2
            if d2 > rr:
                rr = d2
        rad[e] = np.sqrt(rr)
        dia[e] = _diam(dim, xt)
    Aloc = np.zeros((6, 6))
    xc = np.empty((6, 2))
    xc1 = np.empty((3, 2))
    xc2 = np.empty((3, 2))
    p1inv = np.empty(6)
    p2inv = np.empty(6)
    u1l = np.empty(6)
    u2l = np.empty(6)
    nodes = np.empty(6, dtype=np.int64)
    shared = np.empty(3, dtype=np.int64)
    oth_i = np.empty(3, dtype=np.int64)
    oth_j = np.empty(3, dtype=np.int64)
    acc = 0.0
    matmode = mode <= 2
    for i in range(ne):
        ti = tags[i]
        for j in range(i, ne):
            if omega_only and ti != 0 and tags[j] != 0:
                continue
            # classify
            if i == j:
                case = 0
                nloc = nn
                for a in range(nn):
                    nodes[a] = elems[i, a]
            else:
                nsh = 0
                noi = 0
                for a in range(nn):
                    va = elems[i, a]
                    hit = False
                    for b in range(nn):
                        if elems[j, b] == va:
                            shared[nsh] = va
                            nsh += 1
                            hit = True
                            break
                    if not hit:
                        oth_i[noi] = va
                        noi += 1
                noj = 0
                for b in range(nn):
                    vb = elems[j, b]
                    hit = False
                    for a in range(nn):
                        if elems[i, a] == vb:
                            hit = True
                            break
                    if not hit:
                        oth_j[noj] = vb
                        noj += 1
                if nsh == 0:
                    case = 3
                    nloc = 2 * nn
                    for a in range(nn):
                        nodes[a] = elems[i, a]
                        nodes[nn + a] = elems[j, a]
                elif nsh == 1:
                    case = 2
                    nloc = 2 * nn - 1
                    nodes[0] = shared[0]
                    for a in range(nn - 1):
                        nodes[1 + a] = oth_i[a]
                        nodes[nn + a] = oth_j[a]
                else:
                    case = 1
                    nloc = 4
                    nodes[0] = shared[0]
                    nodes[1] = shared[1]
                    nodes[2] = oth_i[0]
                    nodes[3] = oth_j[0]
            # local data
            for a in range(nloc):
                v = nodes[a]
                xc[a, 0] = verts[v, 0]
                if dim == 2:
                    xc[a, 1] = verts[v, 1]
                u1l[a] = u1[v]
                u2l[a] = u2[v]
            if matmode:
                for a in range(nloc):
                    for b in range(nloc):
                        Aloc[a, b] = 0.0
            if case == 0:
                s = _pair_touch(dim, 0, xc, tab_id, rad_id, beta, mode,
                                u1l, u2l, dx, vals, p, inf, tmax, Aloc)
            elif case == 1:
                s = _pair_touch(dim, 1, xc, tab_ed, rad_ed, beta, mode,
                                u1l, u2l, dx, vals, p, inf, tmax, Aloc)
            elif case == 2:
                s = _pair_touch(dim, 2, xc, tab_vx, rad_vx, beta, mode,
                                u1l, u2l, dx, vals, p, inf, tmax, Aloc)
            else:
                for a in range(nn):
                    va = elems[i, a]
                    vb = elems[j, a]
                    xc1[a, 0] = verts[va, 0]
                    xc2[a, 0] = verts[vb, 0]
                    if dim == 2:
                        xc1[a, 1] = verts[va, 1]
                        xc2[a, 1] = verts[vb, 1]
                    else:
                        xc1[a, 1] = 0.0
                        xc2[a, 1] = 0.0
                h = max(dia[i], dia[j])
                dlb = (np.sqrt((cx[i] - cx[j]) ** 2 + (cy[i] - cy[j]) ** 2)
                       - rad[i] - rad[j])
                if dlb >= FAR2_RATIO * h:
                    s = _pair_far(dim, xc1, xc2, bary_f2, w_f2, beta, mode,
                                  u1l, u2l, dx, vals, p, inf, tmax, Aloc)
                elif dlb >= FAR1_RATIO * h:
                    s = _pair_far(dim, xc1, xc2, bary_f1, w_f1, beta, mode,
                                  u1l, u2l, dx, vals, p, inf, tmax, Aloc)
                elif dlb >= 3.0 * h:
                    s = _pair_far(dim, xc1, xc2, bary_lo, w_lo, beta, mode,
                                  u1l, u2l, dx, vals, p, inf, tmax, Aloc)
                else:
                    _make_pinv(dim, xc1, p1inv)
                    _make_pinv(dim, xc2, p2inv)
                    s = _pair_disjoint(dim, xc1, xc2, p1inv, p2inv,
                                       bary_lo, w_lo, bary_hi, w_hi,
                                       near_ratio, max_depth,
                                       beta, mode, u1l, u2l,
                                       dx, vals, p, inf, tmax, Aloc)
            factor = 1.0 if i == j else pair_factor_distinct
            acc += factor * s
            if matmode:
                for a in range(nloc):
                    ga = gmap[nodes[a]]
                    if ga < 0:
                        continue
                    for b in range(nloc):
                        gb = gmap[nodes[b]]
                        if gb < 0:
                            continue
                        A[ga, gb] += factor * Aloc[a, b]
    return acc


# ---------------------------------------------------------------------------
# complement integrals over the exterior of the meshed domain
# ---------------------------------------------------------------------------


@njit(cache=True)
def cw_segments(px, py, segs, beta, dx, vals, p, inf, tmax, mask, use_mask, want_near):
    """int_{Omega^c} |x-y|^{-2-beta} dy via the boundary reduction.

    Each oriented boundary segment (domain on its left) contributes the
    exact closed form sign(rho)|rho|^{-beta}(Phi(tau2/|rho|)-Phi(tau1/|rho|))/beta
    with p = 1+beta/2.  With use_mask, only segments with mask==want_near
    are summed."""
    acc = 0.0
    for k in range(segs.shape[0]):
        if use_mask and mask[k] != want_near:
            continue
        ax = segs[k, 0]
        ay = segs[k, 1]
        bx = segs[k, 2]
        by = segs[k, 3]
        tx = bx - ax
        ty = by - ay
        ln = np.sqrt(tx * tx + ty * ty)
        tx /= ln
        ty /= ln
        nx = ty
        ny = -tx
        rho = (ax - px) * nx + (ay - py) * ny
        if rho == 0.0:
            continue
        tau1 = (ax - px) * tx + (ay - py) * ty
        tau2 = tau1 + ln
        ar = abs(rho)
        sgn = 1.0 if rho > 0.0 else -1.0
        acc += sgn * ar ** (-beta) * (_phi(tau2 / ar, dx, vals, p, inf, tmax)
                                      - _phi(tau1 / ar, dx, vals, p, inf, tmax))
    return acc / beta


@njit(cache=True, inline="always")
def _cw_interval(px, bpts, beta):
    """1D complement weight from boundary points bpts rows (position, normal)."""
    acc = 0.0
    for k in range(bpts.shape[0]):
        d = (bpts[k, 0] - px) * bpts[k, 1]
        acc += d * abs(bpts[k, 0] - px) ** (-1.0 - beta)
    return acc / beta


@njit(cache=True)
def _mass_rule_2d(tri, pinv, bary, bw,
                  segs, beta, dx, vals, p, inf, tmax, mask, use_mask, want_near,
                  M):
    """3x3 matrix of int_tri phi_a phi_b cw dx (hats from parent via pinv)."""
    lam = np.empty(3)
    vol = _vol(2, tri)
    for a in range(3):
        for b in range(3):
            M[a, b] = 0.0
    for q in range(bary.shape[0]):
        px = bary[q, 0] * tri[0, 0] + bary[q, 1] * tri[1, 0] + bary[q, 2] * tri[2, 0]
        py = bary[q, 0] * tri[0, 1] + bary[q, 1] * tri[1, 1] + bary[q, 2] * tri[2, 1]
        _parent_bary(2, px, py, pinv, lam)
        cw = cw_segments(px, py, segs, beta, dx, vals, p, inf, tmax,
                         mask, use_mask, want_near)
        w = bw[q] * vol * cw
        for a in range(3):
            la = w * lam[a]
            for b in range(3):
                M[a, b] += la * lam[b]


@njit(cache=True)
def _adaptive_near_2d(tri, pinv, bary, bw, segs, beta,
                      dx, vals, p, inf, tmax, mask,
                      tol, max_depth, emask, Macc):
    """Adaptive subdivision for the near-segment part of the weighted mass
    matrix; compares the one-level rule against the sum over the four
    children and refines where they disagree.  Accumulates into Macc.

    Only entries with emask != 0 drive the error control: entries coupling
    discarded (boundary) hats can be divergent for beta >= 1 and must not
    be chased."""
    M = np.empty((3, 3))
    Mc = np.empty((3, 3))
    Msum = np.empty((3, 3))
    child = np.empty((3, 2))
    sub = np.empty((3, 2))
    cap = 4096
    st = np.empty((cap, 3, 2))
    sdep = np.empty(cap, dtype=np.int64)
    # absolute error scale from the coarsest estimate
    _mass_rule_2d(tri, pinv, bary, bw, segs, beta, dx, vals, p, inf, tmax,
                  mask, True, 1, M)
    scale = 1e-300
    for a in range(3):
        for b in range(3):
            if emask[a, b] != 0 and abs(M[a, b]) > scale:
                scale = abs(M[a, b])
    for a in range(3):
        st[0, a, 0] = tri[a, 0]
        st[0, a, 1] = tri[a, 1]
    sdep[0] = 0
    top = 1
    while top > 0:
        top -= 1
        dep = sdep[top]
        for a in range(3):
            sub[a, 0] = st[top, a, 0]
            sub[a, 1] = st[top, a, 1]
        _mass_rule_2d(sub, pinv, bary, bw, segs, beta,
                      dx, vals, p, inf, tmax, mask, True, 1, M)
        for a in range(3):
            for b in range(3):
                Msum[a, b] = 0.0
        for kch in range(4):
            _split_child(2, sub, kch, child)
            _mass_rule_2d(child, pinv, bary, bw, segs, beta,
                          dx, vals, p, inf, tmax, mask, True, 1, Mc)
            for a in range(3):
                for b in range(3):
                    Msum[a, b] += Mc[a, b]
        err = 0.0
        for a in range(3):
            for b in range(3):
                if emask[a, b] == 0:
                    continue
                d = abs(Msum[a, b] - M[a, b])
                if d > err:
                    err = d
        if err <= tol * scale or dep >= max_depth or top + 4 >= cap:
            for a in range(3):
                for b in range(3):
                    Macc[a, b] += Msum[a, b]
        else:
            for kch in range(4):
                _split_child(2, sub, kch, child)
                for a in range(3):
                    st[top, a, 0] = child[a, 0]
                    st[top, a, 1] = child[a, 1]
                sdep[top] = dep + 1
                top += 1


@njit(cache=True)
def complement_mass_2d(verts, elems, tags, omega_only, beta, segs,
                       dx, vals, p, inf, tmax, bary, bw,
                       tol, max_depth, near_factor, gmap, A):
    """Accumulate int_Omega phi_i phi_j cw(x) dx into A (through gmap).

    Per element the boundary is split into near segments (adaptive
    triangle subdivision, the integrand may blow up like dist^{-beta})
    and far segments (single smooth rule)."""
    ne = elems.shape[0]
    nb = segs.shape[0]
    mask = np.zeros(nb, dtype=np.int64)
    emask = np.zeros((3, 3), dtype=np.int64)
    tri = np.empty((3, 2))
    pinv = np.empty(6)
    M = np.empty((3, 3))
    Macc = np.empty((3, 3))
    for e in range(ne):
        if omega_only and tags[e] != 0:
            continue
        kept = 0
        for a in range(3):
            ga = gmap[elems[e, a]]
            for b in range(3):
                gb = gmap[elems[e, b]]
                if ga >= 0 and gb >= 0:
                    emask[a, b] = 1
                    kept += 1
                else:
                    emask[a, b] = 0
        if kept == 0:
            continue
        for a in range(3):
            v = elems[e, a]
            tri[a, 0] = verts[v, 0]
            tri[a, 1] = verts[v, 1]
        _make_pinv(2, tri, pinv)
        cx = (tri[0, 0] + tri[1, 0] + tri[2, 0]) / 3.0
        cy = (tri[0, 1] + tri[1, 1] + tri[2, 1]) / 3.0
        h = _diam(2, tri)
        any_near = False
        for k in range(nb):
            mx = 0.5 * (segs[k, 0] + segs[k, 2])
            my = 0.5 * (segs[k, 1] + segs[k, 3])
            sl = np.sqrt((segs[k, 2] - segs[k, 0]) ** 2 + (segs[k, 3] - segs[k, 1]) ** 2)
            d = np.sqrt((mx - cx) ** 2 + (my - cy) ** 2)
            if d <= near_factor * (h + sl):
                mask[k] = 1
                any_near = True
            else:
                mask[k] = 0
        # far part: single smooth rule
        _mass_rule_2d(tri, pinv, bary, bw, segs, beta, dx, vals, p, inf, tmax,
                      mask, True, 0, M)
        for a in range(3):
            for b in range(3):
                Macc[a, b] = M[a, b]
        if any_near:
            _adaptive_near_2d(tri, pinv, bary, bw, segs, beta,
                              dx, vals, p, inf, tmax, mask,
                              tol, max_depth, emask, Macc)
        # scatter
        for a in range(3):
            ga = gmap[elems[e, a]]
            if ga < 0:
                continue
            for b in range(3):
                gb = gmap[elems[e, b]]
                if gb < 0:
                    continue
                A[ga, gb] += Macc[a, b]


@njit(cache=True)
def _mass_rule_1d(seg, pinv, x01, w01, bpts, beta, M):
    lam = np.empty(3)
    vol = abs(seg[1] - seg[0])
    for a in range(2):
        for b in range(2):
            M[a, b] = 0.0
    for q in range(x01.shape[0]):
        px = seg[0] + x01[q] * (seg[1] - seg[0])
        t = (px - pinv[0]) * pinv[1]
        lam[0] = 1.0 - t
        lam[1] = t
        cw = _cw_interval(px, bpts, beta)
        w = w01[q] * vol * cw
        for a in range(2):
            la = w * lam[a]
            for b in range(2):
                M[a, b] += la * lam[b]


@njit(cache=True)
def complement_mass_1d(verts, elems, tags, omega_only, beta, bpts,
                       x01, w01, tol, max_depth, gmap, A):
    """1D analogue of complement_mass_2d; bpts rows are (position, outward
    normal of the meshed domain, i.e. -1 at the left end, +1 at the right)."""
    ne = elems.shape[0]
    M = np.empty((2, 2))
    Mc = np.empty((2, 2))
    Msum = np.empty((2, 2))
    Macc = np.empty((2, 2))
    pinv = np.empty(2)
    seg = np.empty(2)
    sub = np.empty(2)
    chl = np.empty(2)
    cap = 4096
    st = np.empty((cap, 2))
    sdep = np.empty(cap, dtype=np.int64)
    emask = np.zeros((2, 2), dtype=np.int64)
    for e in range(ne):
        if omega_only and tags[e] != 0:
            continue
        kept = 0
        for a in range(2):
            ga = gmap[elems[e, a]]
            for b in range(2):
                gb = gmap[elems[e, b]]
                if ga >= 0 and gb >= 0:
                    emask[a, b] = 1
                    kept += 1
                else:
                    emask[a, b] = 0
        if kept == 0:
            continue
        v0 = elems[e, 0]
        v1 = elems[e, 1]
        seg[0] = verts[v0, 0]
        seg[1] = verts[v1, 0]
        pinv[0] = seg[0]
        pinv[1] = 1.0 / (seg[1] - seg[0])
        _mass_rule_1d(seg, pinv, x01, w01, bpts, beta, M)
        scale = 1e-300
        for a in range(2):
            for b in range(2):
                Macc[a, b] = 0.0
                if emask[a, b] != 0 and abs(M[a, b]) > scale:
                    scale = abs(M[a, b])
        st[0, 0] = seg[0]
        st[0, 1] = seg[1]
        sdep[0] = 0
        top = 1
        while top > 0:
            top -= 1
            dep = sdep[top]
            sub[0] = st[top, 0]
            sub[1] = st[top, 1]
            _mass_rule_1d(sub, pinv, x01, w01, bpts, beta, M)
            mid = 0.5 * (sub[0] + sub[1])
            for a in range(2):
                for b in range(2):
                    Msum[a, b] = 0.0
            for half in range(2):
                if half == 0:
                    chl[0] = sub[0]
                    chl[1] = mid
                else:
                    chl[0] = mid
                    chl[1] = sub[1]
                _mass_rule_1d(chl, pinv, x01, w01, bpts, beta, Mc)
                for a in range(2):
                    for b in range(2):
                        Msum[a, b] += Mc[a, b]
            err = 0.0
            for a in range(2):
                for b in range(2):
                    if emask[a, b] == 0:
                        continue
                    d = abs(Msum[a, b] - M[a, b])
                    if d > err:
                        err = d
            if err <= tol * scale or dep >= max_depth or top + 2 >= cap:
                for a in range(2):
                    for b in range(2):
                        Macc[a, b] += Msum[a, b]
            else:
                for half in range(2):
                    if half == 0:
                        st[top, 0] = sub[0]
                        st[top, 1] = mid
                    else:
                        st[top, 0] = mid
                        st[top, 1] = sub[1]
                    sdep[top] = dep + 1
                    top += 1
        for a in range(2):
            ga = gmap[elems[e, a]]
            if ga < 0:
                continue
            for b in range(2):
                gb = gmap[elems[e, b]]
                if gb < 0:
                    continue
                A[ga, gb] += Macc[a, b]
