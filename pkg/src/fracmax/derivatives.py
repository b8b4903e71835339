"""Derivatives of maximal functions and the pointwise inequalities they satisfy.

Two independent routes to the radial derivative of M_beta f:

* finite differences of the sampled maximal function, and
* r^beta times the outward component of the mean of grad|f| over a good
  ball (Luiro's formula), evaluated with the directional cap kernel.

The checks below report ratios per point; they never raise on a violated
inequality, the caller decides what a violation means.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .geometry import CapKernelContext, _Prepared
from .maximal import MaximalResult, maximal_profile
from .profiles import RadialProfile, grad_l1, modulus, sphere_measure, unit_ball_volume, weak_derivative

ACTIVITY = 0.05
FLOOR = 1e-12


def fd_gradient(result: MaximalResult) -> np.ndarray:
    """Central differences of M f in t, one-sided at both ends."""
    t = result.eval_grid
    if len(t) < 3:
        raise ValueError("need at least 3 evaluation points")
    return np.gradient(result.values, t)


def refine(f: RadialProfile) -> RadialProfile:
    """The same piecewise-linear function on a grid of half the spacing."""
    n = len(f.nodes)
    mids = 0.5 * (f.nodes[:-1] + f.nodes[1:])
    nodes = np.empty(2 * n - 1)
    nodes[0::2] = f.nodes
    nodes[1::2] = mids
    return RadialProfile(f.d, f.h / 2, nodes, f(nodes), f.step)


@dataclass(frozen=True, eq=False)
class GradientPair:
    eval_grid: np.ndarray
    fd: np.ndarray
    luiro: np.ndarray
    luiro_closest: np.ndarray
    spread: np.ndarray
    mask: np.ndarray

    def relative_errors(self) -> np.ndarray:
        m = self.mask
        den = np.maximum(np.abs(self.fd[m]), FLOOR)
        return np.abs(self.fd[m] - self.luiro_closest[m]) / den

    def median_relative_error(self) -> float:
        e = self.relative_errors()
        return float(np.median(e)) if len(e) else math.nan


def _luiro_values(dg: _Prepared, ctx, beta, balls) -> np.ndarray:
    out = np.empty(len(balls))
    for j, (s, r, _) in enumerate(balls):
        if s <= 0:
            out[j] = 0.0
            continue
        m = K.radial_integral(dg.nodes, dg.vals, dg.step, dg.d, 0, dg.prefix,
                              float(s), float(r), K.MOMENT, ctx.c_d)
        out[j] = r ** beta * ctx.d * m / r ** ctx.d
    return out


def luiro_gradient(f: RadialProfile, result: MaximalResult, points=None):
    """r^beta * outward mean of grad|f| over the good balls at each point.

    Returns (at_best_ball, per_point_list_over_all_good_balls). Points with
    no good ball, or not in ``points`` (boolean mask), get 0 and an empty
    list. A ball centred at the origin contributes 0 by symmetry.
    """
    ctx = CapKernelContext(f.d)
    dg = _Prepared(weak_derivative(modulus(f)))
    beta = result.variant.beta
    n = len(result.eval_grid)
    best = np.zeros(n)
    every = [np.zeros(0)] * n
    for p, gb in enumerate(result.good):
        if len(gb) == 0 or (points is not None and not points[p]):
            continue
        vals = _luiro_values(dg, ctx, beta, gb.balls)
        every[p] = vals
        bs, br = result.best_s[p], result.best_r[p]
        hit = np.nonzero((gb.balls[:, 0] == bs) & (gb.balls[:, 1] == br))[0]
        best[p] = vals[hit[0]] if len(hit) else vals[0]
    return best, every


def activity_mask(result: MaximalResult, fd: np.ndarray, threshold: float = ACTIVITY,
                  cluster: float = 2.0) -> np.ndarray:
    """Points where the derivative is clearly nonzero and the good balls form one cluster.

    The origin and the last point are excluded: there the finite difference
    is one-sided.
    """
    h = result.h
    mask = np.abs(fd) >= threshold * np.max(np.abs(fd)) if np.any(fd) else np.zeros(len(fd), bool)
    mask &= result.values > 0
    mask[0] = mask[-1] = False
    for p, gb in enumerate(result.good):
        if not mask[p]:
            continue
        if len(gb) == 0:
            mask[p] = False
            continue
        ds = np.ptp(gb.balls[:, 0])
        dr = np.ptp(gb.balls[:, 1])
        if ds > cluster * h * (1 + 1e-9) or dr > cluster * h * (1 + 1e-9):
            mask[p] = False
    return mask


def gradient_pair(f: RadialProfile, result: MaximalResult, threshold: float = ACTIVITY) -> GradientPair:
    fd = fd_gradient(result)
    mask = activity_mask(result, fd, threshold)
    best, every = luiro_gradient(f, result, points=mask)
    closest = best.copy()
    spread = np.zeros(len(fd))
    for p in np.nonzero(mask)[0]:
        vals = every[p]
        closest[p] = vals[np.argmin(np.abs(vals - fd[p]))]
        spread[p] = np.ptp(vals)
    return GradientPair(result.eval_grid, fd, best, closest, spread, mask)


# -- ratio reports -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RatioReport:
    name: str
    t: np.ndarray
    numerator: np.ndarray
    denominator: np.ndarray
    bound: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def used(self) -> np.ndarray:
        return self.denominator > FLOOR

    @property
    def ratio(self) -> np.ndarray:
        out = np.zeros_like(self.numerator)
        u = self.used
        out[u] = self.numerator[u] / self.denominator[u]
        return out

    @property
    def skipped(self) -> int:
        return int(np.sum(~self.used))

    @property
    def max(self) -> float:
        r = self.ratio[self.used]
        return float(r.max()) if len(r) else 0.0

    @property
    def median(self) -> float:
        r = self.ratio[self.used]
        return float(np.median(r)) if len(r) else 0.0

    @property
    def flags(self) -> np.ndarray:
        if self.bound is None:
            return np.zeros(len(self.t), bool)
        return self.used & (self.ratio > self.bound)

    @property
    def violations(self) -> int:
        return int(np.sum(self.flags))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "numerator", "denominator", "ratio", "flag"])
        flags = self.flags
        ratio = self.ratio
        for j in range(len(self.t)):
            w.writerow([repr(float(self.t[j])), repr(float(self.numerator[j])),
                        repr(float(self.denominator[j])), repr(float(ratio[j])), int(flags[j])])
        return buf.getvalue()

    def summary(self) -> str:
        return (f"{self.name}: max={self.max:.6g} median={self.median:.6g} "
                f"violations={self.violations} skipped={self.skipped}")


def check_kinnunen(f: RadialProfile, eval_grid=None, step: float | None = None) -> RatioReport:
    """|d/dt M f| against M(|grad f|) at beta = 0; the ratio should not exceed 1."""
    res = maximal_profile(f, 0.0, "noncentered", eval_grid, step)
    grad = modulus(weak_derivative(f))
    res_g = maximal_profile(grad, 0.0, "noncentered", res.eval_grid, step)
    num = np.abs(fd_gradient(res))
    return RatioReport("kinnunen", res.eval_grid, num, res_g.values, bound=1.0)


def check_ks(f: RadialProfile, beta: float, variant: str = "noncentered",
             eval_grid=None, step: float | None = None) -> RatioReport:
    """|d/dt M_beta f| / M_{beta-1} f for 1 <= beta < d; the max is the empirical constant."""
    if f.d < 2:
        raise ValueError("this check is set up for d >= 2")
    if not 1 <= beta < f.d:
        raise ValueError("needs 1 <= beta < d; use check_refined_ks below 1")
    res = maximal_profile(f, beta, variant, eval_grid, step)
    low = maximal_profile(f, beta - 1, variant, res.eval_grid, step)
    num = np.abs(fd_gradient(res))
    num[0] = 0.0  # radial derivative at the origin is not a gradient component
    return RatioReport(f"ks[{variant},beta={beta}]", res.eval_grid, num, low.values)


def check_refined_ks(f: RadialProfile, result: MaximalResult, pair: GradientPair | None = None) -> RatioReport:
    """Per masked point: |r^beta mean grad|f|| over r^(beta-1) mean |f| at the best ball.

    At beta = 0 only points with M f > |f| are used.
    """
    pair = pair or gradient_pair(f, result)
    mask = pair.mask.copy()
    beta = result.variant.beta
    if beta == 0:
        mask &= result.values > np.abs(f(result.eval_grid)) * (1 + 1e-9)
    num = np.where(mask, np.abs(pair.luiro), 0.0)
    den = np.where(mask, result.values / np.where(np.isfinite(result.best_r), result.best_r, 1.0), 0.0)
    return RatioReport(f"refined_ks[beta={beta}]", result.eval_grid, num, den,
                       extra={"masked": int(mask.sum())})


def check_inner_ball(f: RadialProfile, result: MaximalResult, tol: float = 1e-9) -> RatioReport:
    """|mean grad|f|| <= mean |grad f| |y|/t over inner-type good balls (s + r <= t).

    One row per (point, ball). The right side is also checked against the
    unweighted mean of |grad f| (the weight is at most 1 inside such balls).
    """
    ctx = CapKernelContext(f.d)
    beta = result.variant.beta
    dg = _Prepared(weak_derivative(modulus(f)))
    absg = modulus(weak_derivative(f))
    w1 = _Prepared(absg, extra=1)
    w0 = _Prepared(absg, extra=0)
    ts, nums, dens, unweighted = [], [], [], []
    for gb in result.good:
        t = gb.t
        if t <= 0 or len(gb) == 0:
            continue
        inner = gb.balls[gb.balls[:, 0] + gb.balls[:, 1] <= t + tol * max(1.0, t)]
        for s, r, _ in inner:
            lhs = abs(_luiro_values(dg, ctx, 0.0, [(s, r, 0.0)])[0])
            rhs = ctx.d * w1.integral(s, r, K.CAP, ctx) / r ** ctx.d / t
            plain = ctx.d * w0.integral(s, r, K.CAP, ctx) / r ** ctx.d
            ts.append(t)
            nums.append(lhs)
            dens.append(rhs)
            unweighted.append(plain)
    ts, nums, dens, unweighted = map(np.asarray, (ts, nums, dens, unweighted))
    weight_ok = int(np.sum(dens <= unweighted * (1 + 1e-9) + 1e-14)) if len(ts) else 0
    rep = RatioReport("inner_ball", ts, nums, dens, bound=1.0 + 1e-6,
                      extra={"balls": len(ts), "weight_bound_ok": weight_ok, "beta": beta})
    return rep


@dataclass(frozen=True)
class GeometryReport:
    checked_points: int
    checked_balls: int
    tangency_violations: int
    one_sided_violations: int
    skipped_tangency: bool

    @property
    def violations(self) -> int:
        return self.tangency_violations + self.one_sided_violations

    def summary(self) -> str:
        return (f"geometry: points={self.checked_points} balls={self.checked_balls} "
                f"tangency_violations={self.tangency_violations} "
                f"one_sided_violations={self.one_sided_violations}")


def check_ball_geometry(result: MaximalResult, pair: GradientPair, slack: float = 2.0) -> GeometryReport:
    """Good balls at active points touch t and lie on one side of the sphere |y| = t."""
    h = result.h
    centered = result.variant.kind == "centered"
    tang = one = balls = pts = 0
    for p in np.nonzero(pair.mask)[0]:
        gb = result.good[p]
        t = gb.t
        pts += 1
        for s, r, _ in gb.balls:
            balls += 1
            if not centered and abs(abs(s - t) - r) > slack * h:
                tang += 1
            if not centered and not (s + r <= t + slack * h or s - r >= t - slack * h):
                one += 1
    return GeometryReport(pts, balls, tang, one, centered)


# -- majorants u and v -------------------------------------------------------------

def compute_u(f: RadialProfile, t) -> np.ndarray:
    """u(t) = d omega_d int_t^inf |g'(u)| / u du with g = |f~|."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("u is singular at the origin; use t > 0")
    g = weak_derivative(modulus(f))
    a, b = g.nodes[:-1], g.nodes[1:]
    c = np.abs(g.values[:-1])
    lo = np.maximum(a[None, :], t[:, None])
    seg = np.where(b[None, :] > lo, c[None, :] * np.log(b[None, :] / lo), 0.0)
    return sphere_measure(f.d) * seg.sum(axis=1)


def compute_v(f: RadialProfile, t) -> np.ndarray:
    """v(t) = d omega_d / t^(d+1) * int_0^t |f~'(u)| u^d du."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("v is taken on t > 0 only")
    g = modulus(weak_derivative(f))
    prep = _Prepared(g, extra=1)
    pw = f.d
    inner = np.array([K.poly_to(prep.nodes, prep.vals, True, pw, prep.prefix, float(x)) for x in t])
    return sphere_measure(f.d) * inner / t ** (f.d + 1)


def radial_l1(func, nodes, d: int, far: float = 1e4, n_gl: int = 10) -> float:
    """d omega_d int_0^inf func(t) t^(d-1) dt on the node segments, then geometric cells."""
    x, w = np.polynomial.legendre.leggauss(n_gl)
    edges = np.asarray(nodes, dtype=float)
    top = edges[-1]
    tail = top * np.geomspace(1.0, far, 200)
    edges = np.concatenate([edges, tail[1:]])
    a, b = edges[:-1], edges[1:]
    pts = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * x[None, :]
    vals = func(pts.ravel()).reshape(pts.shape)
    return sphere_measure(d) * float(np.sum(0.5 * (b - a)[:, None] * w[None, :] * vals * pts ** (d - 1)))


@dataclass(frozen=True)
class DominationReport:
    q: float
    c_fit: float
    c_fit_refined: float | None
    drift: float | None
    points: int
    stable: bool | None


def _domination_fit(f, beta, a, b, step):
    q = f.d / (f.d - beta)
    step = step or f.h
    n = int(round(b / step))
    ts = np.arange(n + 1) * step
    full = maximal_profile(f, beta, "noncentered", ts, step)
    trunc = maximal_profile(f, beta, "truncated_quarter", ts, step)
    lhs = np.abs(fd_gradient(full)) ** q
    sel = (ts >= a) & (ts <= b)
    sel[-1] = False
    tt = ts[sel]
    rhs = (grad_l1(modulus(f)) ** (q - 1) * (compute_u(f, tt) + compute_v(f, tt))
           + np.abs(fd_gradient(trunc))[sel] ** q)
    ok = rhs > FLOOR
    c = float(np.max(lhs[sel][ok] / rhs[ok])) if np.any(ok) else 0.0
    return q, c, int(sel.sum())


def check_domination(f: RadialProfile, beta: float, annulus=(0.2, 1.5), step: float | None = None,
                     refine_check: bool = True, max_drift: float = 0.25) -> DominationReport:
    """Smallest C with |grad M f|^q <= C (||grad|f|||_1^(q-1) (u + v) + |grad M^I f|^q) on an annulus."""
    a, b = annulus
    if not 0 < a < b:
        raise ValueError("annulus needs 0 < a < b")
    q, c, npts = _domination_fit(f, beta, a, b, step)
    if not refine_check:
        return DominationReport(q, c, None, None, npts, None)
    _, c2, _ = _domination_fit(refine(f), beta, a, b, (step or f.h) / 2)
    drift = abs(c2 - c) / max(c, FLOOR)
    return DominationReport(q, c, c2, drift, npts, drift <= max_drift)


@dataclass(frozen=True)
class IdentityReport:
    u_l1: float
    u_expected: float
    v_l1: float
    v_expected: float

    @property
    def u_error(self) -> float:
        return abs(self.u_l1 - self.u_expected) / max(self.u_expected, FLOOR)

    @property
    def v_error(self) -> float:
        return abs(self.v_l1 - self.v_expected) / max(self.v_expected, FLOOR)

    def summary(self) -> str:
        return f"uv_identities: u_rel_err={self.u_error:.3g} v_rel_err={self.v_error:.3g}"


def uv_identities(f: RadialProfile) -> IdentityReport:
    """||u||_1 = omega_d ||grad|f|||_1 and ||v||_1 = d omega_d ||grad f||_1, measured."""
    if f.d < 2:
        raise ValueError("u and v are set up for d >= 2")
    w = unit_ball_volume(f.d)
    u = radial_l1(lambda t: compute_u(f, t), f.nodes, f.d)
    v = radial_l1(lambda t: compute_v(f, t), f.nodes, f.d)
    return IdentityReport(u, w * grad_l1(modulus(f)), v, f.d * w * grad_l1(f))
