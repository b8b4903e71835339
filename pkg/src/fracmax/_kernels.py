"""Compiled inner loops for ball averages of radial profiles.

All integrals have the form

    I = int_0^inf g(u) u^(d-1+extra) K(u; s, r) du

with g a profile (linear or step), K either the cap fraction of the sphere
|y| = u inside B(z, r), |z| = s, or its first directional moment. The
fully covered range u <= r - s is integrated in closed form from prefix
sums; the partial range |s - r| < u < s + r is split at profile nodes and
each piece is integrated with Gauss-Legendre after the substitution
u = m - w cos(tau). The substitution absorbs the square-root behaviour of
the kernel at the tangency points, which plain trapezoid rules do not.
"""

import math

import numpy as np
from numba import config, njit, prange

# the system TBB is too old for numba; skip straight to OpenMP / workqueue
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

N_GL = 10
_x, _w = np.polynomial.legendre.leggauss(N_GL)
GL_TAU = 0.5 * math.pi * (_x + 1.0)
GL_WT = 0.5 * math.pi * _w
GL_SIN = np.sin(GL_TAU)
GL_COS = np.cos(GL_TAU)

CAP = 0
MOMENT = 1


@njit(cache=True)
def sine_power_integral(theta, d):
    """int_0^theta sin^(d-2)(phi) dphi for d >= 2, by the reduction formula."""
    n = d - 2
    s = math.sin(theta)
    c = math.cos(theta)
    if n % 2 == 0:
        val = theta
        k = 0
    else:
        val = 1.0 - c
        k = 1
    while k < n:
        k += 2
        val = (-(s ** (k - 1)) * c + (k - 1) * val) / k
    return val


@njit(cache=True)
def cap_fraction_scalar(u, s, r, d, cd):
    if d == 1:
        inside = 0.0
        if abs(u - s) <= r:
            inside += 0.5
        if u + s <= r:
            inside += 0.5
        return inside
    if u + s <= r:
        return 1.0
    if u <= s - r or u >= s + r:
        return 0.0
    c = (u * u + s * s - r * r) / (2.0 * u * s)
    c = min(1.0, max(-1.0, c))
    return sine_power_integral(math.acos(c), d) / cd


@njit(cache=True)
def cap_moment_scalar(u, s, r, d, cd):
    if d == 1:
        m = 0.0
        if abs(u - s) <= r:
            m += 0.5
        if u + s <= r:
            m -= 0.5
        return m
    if u + s <= r:
        return 0.0
    if u <= s - r or u >= s + r:
        return 0.0
    c = (u * u + s * s - r * r) / (2.0 * u * s)
    c = min(1.0, max(-1.0, c))
    return math.sqrt(max(0.0, 1.0 - c * c)) ** (d - 1) / ((d - 1) * cd)


@njit(cache=True)
def poly_prefix(nodes, vals, step, pw):
    """P[k] = int_0^{nodes[k]} g(u) u^pw du, exact per segment."""
    n = nodes.shape[0]
    out = np.zeros(n)
    for k in range(n - 1):
        out[k + 1] = out[k] + _seg_poly(nodes, vals, step, pw, k, nodes[k + 1])
    return out


@njit(cache=True)
def _seg_poly(nodes, vals, step, pw, k, x):
    # int_{nodes[k]}^{x} g(u) u^pw du with x inside segment k
    a = nodes[k]
    if step:
        slope = 0.0
    else:
        slope = (vals[k + 1] - vals[k]) / (nodes[k + 1] - a)
    alpha = vals[k] - slope * a
    return (alpha * (x ** (pw + 1) - a ** (pw + 1)) / (pw + 1)
            + slope * (x ** (pw + 2) - a ** (pw + 2)) / (pw + 2))


@njit(cache=True)
def poly_to(nodes, vals, step, pw, prefix, x):
    """int_0^x g(u) u^pw du using the prefix table."""
    if x <= 0.0:
        return 0.0
    n = nodes.shape[0]
    if x >= nodes[n - 1]:
        return prefix[n - 1]
    k = np.searchsorted(nodes, x, side="right") - 1
    return prefix[k] + _seg_poly(nodes, vals, step, pw, k, x)


@njit(cache=True)
def _g_at(nodes, vals, step, k, u):
    if step:
        return vals[k]
    lam = (u - nodes[k]) / (nodes[k + 1] - nodes[k])
    return vals[k] + lam * (vals[k + 1] - vals[k])


@njit(cache=True)
def radial_integral(nodes, vals, step, d, extra, prefix, s, r, kind, cd):
    """I(s, r) as described in the module docstring.

    ``prefix`` must come from ``poly_prefix(nodes, vals, step, d - 1 + extra)``.
    """
    pw = d - 1 + extra
    end = nodes[nodes.shape[0] - 1]
    if d == 1:
        hi = poly_to(nodes, vals, step, pw, prefix, min(s + r, end))
        lo = poly_to(nodes, vals, step, pw, prefix, min(max(0.0, s - r), end))
        refl = poly_to(nodes, vals, step, pw, prefix, min(max(0.0, r - s), end))
        if kind == CAP:
            return 0.5 * (hi - lo + refl)
        return 0.5 * (hi - lo - refl)

    total = 0.0
    if kind == CAP and r > s:
        total += poly_to(nodes, vals, step, pw, prefix, min(r - s, end))
    if s <= 0.0:
        return total
    a = abs(s - r)
    b = min(s + r, end)
    if a >= b:
        return total
    n = nodes.shape[0]
    k = np.searchsorted(nodes, a, side="right") - 1
    while k < n - 1 and nodes[k] < b:
        pa = max(a, nodes[k])
        pb = min(b, nodes[k + 1])
        if pb > pa:
            mid = 0.5 * (pa + pb)
            half = 0.5 * (pb - pa)
            acc = 0.0
            for i in range(GL_TAU.shape[0]):
                u = mid - half * GL_COS[i]
                if kind == CAP:
                    kern = cap_fraction_scalar(u, s, r, d, cd)
                else:
                    kern = cap_moment_scalar(u, s, r, d, cd)
                acc += GL_WT[i] * GL_SIN[i] * _g_at(nodes, vals, step, k, u) * u ** pw * kern
            total += half * acc
        k += 1
    return total


@njit(cache=True, parallel=True)
def average_table(nodes, vals, step, d, prefix, s_grid, r_grid, beta, cd, end):
    """A[i, k] = r_k^beta * mean of g over B(z, r_k), |z| = s_i."""
    ns = s_grid.shape[0]
    nr = r_grid.shape[0]
    out = np.zeros((ns, nr))
    for i in prange(ns):
        s = s_grid[i]
        for k in range(nr):
            r = r_grid[k]
            if s - r >= end:
                continue
            integral = radial_integral(nodes, vals, step, d, 0, prefix, s, r, CAP, cd)
            out[i, k] = r ** beta * d * integral / r ** d
    return out


@njit(cache=True)
def maximize_points(table, s_grid, r_grid, ts, kind, beta, d, l1_over_wd, eps_rel, tol):
    """Per-point maximum over admissible cells plus the near-argmax set.

    kind: 0 noncentered, 1 centered, 2 truncated_quarter, 3 inner_only,
    4 outer_only. Radii are scanned upward; the scan stops once the
    envelope r^(beta-d) ||f||_1 / omega_d drops below the retained band.
    Returns values, best (i, k), and CSR arrays of good cells.
    """
    npt = ts.shape[0]
    nr = r_grid.shape[0]
    ns = s_grid.shape[0]
    values = np.zeros(npt)
    best_i = -np.ones(npt, dtype=np.int64)
    best_k = -np.ones(npt, dtype=np.int64)
    counts = np.zeros(npt, dtype=np.int64)
    # first pass: maxima
    for p in range(npt):
        t = ts[p]
        best = 0.0
        for k in range(nr):
            r = r_grid[k]
            if kind == 2 and r > t / 4.0 + tol:
                break
            if l1_over_wd * r ** (beta - d) < (1.0 - eps_rel) * best:
                break
            i0, i1 = _s_range(s_grid, t, r, kind, tol)
            for i in range(i0, i1):
                v = table[i, k]
                if v > best:
                    best = v
                    best_i[p] = i
                    best_k[p] = k
        values[p] = best
    # second pass: count and collect the near-argmax cells
    for p in range(npt):
        t = ts[p]
        thr = (1.0 - eps_rel) * values[p]
        if values[p] <= 0.0:
            continue
        c = 0
        for k in range(nr):
            r = r_grid[k]
            if kind == 2 and r > t / 4.0 + tol:
                break
            if l1_over_wd * r ** (beta - d) < thr:
                break
            i0, i1 = _s_range(s_grid, t, r, kind, tol)
            for i in range(i0, i1):
                if table[i, k] >= thr:
                    c += 1
        counts[p] = c
    offsets = np.zeros(npt + 1, dtype=np.int64)
    for p in range(npt):
        offsets[p + 1] = offsets[p] + counts[p]
    gi = np.zeros(offsets[npt], dtype=np.int64)
    gk = np.zeros(offsets[npt], dtype=np.int64)
    for p in range(npt):
        t = ts[p]
        thr = (1.0 - eps_rel) * values[p]
        if values[p] <= 0.0:
            continue
        c = offsets[p]
        for k in range(nr):
            r = r_grid[k]
            if kind == 2 and r > t / 4.0 + tol:
                break
            if l1_over_wd * r ** (beta - d) < thr:
                break
            i0, i1 = _s_range(s_grid, t, r, kind, tol)
            for i in range(i0, i1):
                if table[i, k] >= thr:
                    gi[c] = i
                    gk[c] = k
                    c += 1
    return values, best_i, best_k, offsets, gi, gk


@njit(cache=True)
def _s_range(s_grid, t, r, kind, tol):
    # half-open index range of admissible centre norms for (t, r)
    if kind == 1:
        lo = t - tol
        hi = t + tol
    elif kind == 3:
        lo = t - r - tol
        hi = t - r + tol
    elif kind == 4:
        lo = t + r - tol
        hi = t + r + tol
    else:
        lo = t - r - tol
        hi = t + r + tol
    i0 = np.searchsorted(s_grid, lo, side="left")
    i1 = np.searchsorted(s_grid, hi, side="right")
    return i0, i1


@njit(cache=True)
def centered_1d(G, h, beta, r_cap_idx, eps_rel):
    """Centered fractional maximal function on a uniform line grid.

    G[i] is the integral of |f| up to node i (constant beyond the ends).
    Radii are k*h for k = 1..r_cap_idx[i].
    """
    n = G.shape[0]
    values = np.zeros(n)
    best_k = np.zeros(n, dtype=np.int64)
    for i in range(n):
        best = 0.0
        bk = 0
        for k in range(1, r_cap_idx[i] + 1):
            a = i - k
            b = i + k
            ga = G[0] if a < 0 else G[a]
            gb = G[n - 1] if b >= n else G[b]
            r = k * h
            v = r ** beta * (gb - ga) / (2.0 * r)
            if v > best:
                best = v
                bk = k
        values[i] = best
        best_k[i] = bk
    return values, best_k


@njit(cache=True)
def noncentered_1d(G, h, beta):
    """Non-centered fractional maximal function over grid intervals [a, b] containing x.

    Only endpoints inside the sampled range are scanned: moving an endpoint
    past the data adds no mass and, for beta < 1, only lowers r^beta / 2r.
    For each left end a, a suffix maximum over right ends gives the best
    interval for every x >= a, so the whole sweep is O(n^2).
    """
    n = G.shape[0]
    values = np.zeros(n)
    ba = np.zeros(n, dtype=np.int64)
    bb = np.zeros(n, dtype=np.int64)
    suf = np.zeros(n)
    arg = np.zeros(n, dtype=np.int64)
    for a in range(n - 1):
        best = 0.0
        barg = a + 1
        for b in range(n - 1, a, -1):
            r = 0.5 * (b - a) * h
            v = r ** beta * (G[b] - G[a]) / (2.0 * r)
            if v >= best:
                best = v
                barg = b
            suf[b] = best
            arg[b] = barg
        suf[a] = suf[a + 1]
        arg[a] = arg[a + 1]
        for x in range(a, n):
            if suf[x] > values[x]:
                values[x] = suf[x]
                ba[x] = a
                bb[x] = arg[x]
    return values, ba, bb
