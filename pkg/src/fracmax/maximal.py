"""Fractional maximal operators on radial profiles and on the line.

For a radial f the supremum over balls B(z, r) containing x reduces to a
search over (s, r) = (|z|, r) subject to |s - |x|| <= r, since the ball
average only depends on these two numbers. Values come from a precomputed
:class:`~fracmax.geometry.AverageTable`; the search keeps every cell within
a relative tolerance of the maximum (the discrete good balls).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .geometry import AverageTable, CapKernelContext, build_average_table, cached_table
from .profiles import LineFunction, RadialProfile, lp_norm, modulus, unit_ball_volume

KINDS = ("noncentered", "centered", "truncated_quarter", "inner_only", "outer_only")
EPS_REL = 1e-6


@dataclass(frozen=True)
class VariantSpec:
    """Which balls are admissible at an evaluation point t.

    noncentered: |s - t| <= r; centered: s = t; truncated_quarter: also
    r <= t/4; inner_only: s + r = t; outer_only: s - r = t.
    """

    kind: str = "noncentered"
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variant {self.kind!r}; choose from {KINDS}")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")

    @property
    def code(self) -> int:
        return KINDS.index(self.kind)

    def admits(self, s: float, r: float, t: float, tol: float = 1e-12) -> bool:
        if self.kind == "centered":
            return abs(s - t) <= tol
        if abs(s - t) > r + tol:
            return False
        if self.kind == "truncated_quarter":
            return r <= t / 4 + tol
        if self.kind == "inner_only":
            return s + r <= t + tol
        if self.kind == "outer_only":
            return s - r >= t - tol
        return True


@dataclass(frozen=True, eq=False)
class GoodBallSet:
    """Near-argmax balls at one evaluation point, as rows (s, r, A)."""

    t: float
    value: float
    balls: np.ndarray = field(repr=False)

    @property
    def r_min(self) -> float:
        return float(self.balls[:, 1].min()) if len(self.balls) else math.nan

    @property
    def r_max(self) -> float:
        return float(self.balls[:, 1].max()) if len(self.balls) else math.nan

    def __len__(self):
        return len(self.balls)


@dataclass(frozen=True, eq=False)
class MaximalResult:
    variant: VariantSpec
    eval_grid: np.ndarray
    values: np.ndarray
    good: list
    best_s: np.ndarray
    best_r: np.ndarray
    table_ref: str
    d: int
    h: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value", "r_min", "r_max", "s_best", "r_best"])
        for p, t in enumerate(self.eval_grid):
            gb = self.good[p]
            w.writerow([_fmt(t), _fmt(self.values[p]), _fmt(gb.r_min), _fmt(gb.r_max),
                        _fmt(self.best_s[p]), _fmt(self.best_r[p])])
        return buf.getvalue()


def _fmt(x) -> str:
    return repr(float(x))


def _coverage_tol(table: AverageTable) -> float:
    return 1e-9 * float(table.r_grid[0])


def maximize(table: AverageTable, ts, variant: VariantSpec, eps_rel: float = EPS_REL):
    """Maximize the table at several evaluation points (centered needs s = t columns)."""
    if not math.isclose(variant.beta, table.beta, abs_tol=1e-15):
        raise ValueError("variant beta differs from table beta")
    ts = np.ascontiguousarray(ts, dtype=float)
    if ts.size and (ts.min() < 0 or ts.max() > table.s_grid[-1] + _coverage_tol(table)):
        raise ValueError("evaluation point outside table coverage")
    l1w = table.f_l1 / unit_ball_volume(table.d)
    vals, bi, bk, off, gi, gk = K.maximize_points(
        table.values, table.s_grid, table.r_grid, ts, variant.code, table.beta, table.d,
        l1w, eps_rel, _coverage_tol(table))
    good = []
    for p, t in enumerate(ts):
        sl = slice(off[p], off[p + 1])
        i, k = gi[sl], gk[sl]
        balls = np.column_stack([table.s_grid[i], table.r_grid[k], table.values[i, k]])
        good.append(GoodBallSet(float(t), float(vals[p]), balls.reshape(-1, 3)))
    best_s = np.where(bi >= 0, table.s_grid[np.maximum(bi, 0)], np.nan)
    best_r = np.where(bk >= 0, table.r_grid[np.maximum(bk, 0)], np.nan)
    return vals, good, best_s, best_r


def maximal_radial(table: AverageTable, t: float, variant: VariantSpec,
                   f: RadialProfile | None = None):
    """M f(t) for one point; returns (value, GoodBallSet).

    A centered evaluation at t off the s-grid needs the profile ``f`` to
    compute the exact s = t column.
    """
    tol = _coverage_tol(table)
    if variant.kind == "centered" and not np.any(np.abs(table.s_grid - t) <= tol):
        if f is None:
            raise ValueError("centered evaluation off the s-grid needs the profile")
        column = build_average_table(f, table.beta, [t], table.r_grid)
        table = column
    vals, good, _, _ = maximize(table, [t], variant)
    return float(vals[0]), good[0]


def radius_cap(support: float, t_top: float, kind: str) -> float:
    """Radius beyond which no admissible ball can improve the maximum.

    A ball of radius R covering the whole support has value
    R^(beta-d) ||f||_1 / omega_d, which bounds every ball of radius >= R.
    """
    if kind == "centered":
        return t_top + support
    if kind == "truncated_quarter":
        return t_top / 4
    return max(support, 0.5 * (t_top + support))


def default_eval_grid(h: float, t_top: float) -> np.ndarray:
    n = int(round(t_top / h))
    return np.arange(n + 1) * h


def maximal_profile(f: RadialProfile, beta: float, variant: str | VariantSpec = "noncentered",
                    eval_grid=None, step: float | None = None, table: AverageTable | None = None,
                    cache_dir=None) -> MaximalResult:
    """Sample M_beta f (for the chosen variant) on ``eval_grid``.

    The (s, r) search grid has spacing ``step`` (default: the profile
    spacing ``f.h``); evaluation points should lie on that grid.
    """
    if isinstance(variant, str):
        variant = VariantSpec(variant, beta)
    if not 0 <= beta < f.d:
        raise ValueError(f"beta must lie in [0, {f.d}), got {beta}")
    step = float(step or f.h)
    if eval_grid is None:
        eval_grid = default_eval_grid(step, f.t_max)
    ts = np.asarray(eval_grid, dtype=float)
    if table is None:
        support = max(modulus(f).support_end(), step)
        t_top = float(ts.max())
        r_top = radius_cap(support, t_top, variant.kind) + step
        nr = max(1, int(math.ceil(r_top / step)))
        r_grid = np.arange(1, nr + 1) * step
        if variant.kind == "centered":
            s_grid = ts
        else:
            s_top = max(t_top, min(t_top + r_top, support + r_top))
            s_grid = np.arange(int(math.ceil(s_top / step)) + 1) * step
        table = cached_table(f, beta, s_grid, r_grid, cache_dir, CapKernelContext(f.d))
    vals, good, bs, br = maximize(table, ts, variant)
    return MaximalResult(variant, ts, vals, good, bs, br, table.f_ref, f.d, step)


# -- the line ----------------------------------------------------------------

def _line_prefix(f: LineFunction) -> np.ndarray:
    v = np.abs(f.values)
    a, b = f.values[:-1], f.values[1:]
    same = a * b >= 0
    seg = np.where(same, 0.5 * f.h * (v[:-1] + v[1:]),
                   0.5 * f.h * (a * a + b * b) / np.where(same, 1.0, np.abs(a - b)))
    return np.concatenate([[0.0], np.cumsum(seg)])


def maximal_1d(f: LineFunction, beta: float, centered: bool = False) -> MaximalResult:
    """M_beta f on the line grid of ``f``, with exact interval integrals.

    Balls are grid intervals: centered ones [x - kh, x + kh], non-centered
    ones [a, b] with node endpoints. Good intervals are reported as (z, r)
    for the maximizing interval.
    """
    if not 0 <= beta < 1:
        raise ValueError(f"beta must lie in [0, 1) on the line, got {beta}")
    G = _line_prefix(f)
    n = len(G)
    x = f.x
    nz = np.nonzero(f.values)[0]
    if len(nz) == 0:
        vals = np.zeros(n)
        good = [GoodBallSet(float(t), 0.0, np.zeros((0, 3))) for t in x]
        nan = np.full(n, np.nan)
        return MaximalResult(VariantSpec("centered" if centered else "noncentered", beta),
                             x, vals, good, nan, nan, "line", 1, f.h)
    lo, hi = nz[0] - 1, nz[-1] + 1
    idx = np.arange(n)
    if centered:
        cap = np.maximum(np.abs(idx - lo), np.abs(hi - idx)) + 1
        vals, bk = K.centered_1d(G, f.h, float(beta), cap.astype(np.int64), EPS_REL)
        z = x.copy()
        r = bk * f.h
    else:
        vals, ba, bb = K.noncentered_1d(G, f.h, float(beta))
        z = 0.5 * (x[ba] + x[bb])
        r = 0.5 * (bb - ba) * f.h
    good = [GoodBallSet(float(x[p]), float(vals[p]),
                        np.array([[z[p], r[p], vals[p]]]) if vals[p] > 0 else np.zeros((0, 3)))
            for p in range(n)]
    kind = "centered" if centered else "noncentered"
    return MaximalResult(VariantSpec(kind, beta), x, vals, good, z, r, "line", 1, f.h)


@dataclass(frozen=True)
class RadiusStats:
    count: int
    r_min: float
    r_max: float
    r_median: float
    tangency: np.ndarray = field(repr=False)
    zero_radius_points: int = 0


def good_radius_stats(result: MaximalResult) -> RadiusStats:
    """Good-radius summary over points with positive value.

    ``tangency[p]`` is the largest | |s - t| - r | over the good balls at
    point p (NaN where there are none). With beta = 0 a radius-zero limit is
    legitimate where M f = f; such points show up with r_min equal to the
    smallest grid radius and are counted in ``zero_radius_points``.
    """
    radii = []
    tang = np.full(len(result.eval_grid), np.nan)
    zero_pts = 0
    for p, gb in enumerate(result.good):
        if gb.value <= 0 or len(gb) == 0:
            continue
        radii.append(gb.balls[:, 1])
        tang[p] = np.max(np.abs(np.abs(gb.balls[:, 0] - gb.t) - gb.balls[:, 1]))
        if result.variant.beta == 0 and gb.r_min <= result.h * (1 + 1e-9):
            zero_pts += 1
    if not radii:
        return RadiusStats(0, math.nan, math.nan, math.nan, tang, 0)
    mins = np.array([r.min() for r in radii])
    allr = np.concatenate(radii)
    return RadiusStats(len(radii), float(mins.min()), float(allr.max()),
                       float(np.median(allr)), tang, zero_pts)
