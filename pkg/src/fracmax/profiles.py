"""Piecewise-linear radial profiles, line functions and their norms.

A radial function on R^d is stored through its profile f~ on [0, t_max],
sampled on nodes and interpolated linearly in between. Norms carry the full
measure constant d * omega_d, so for d = 1 they agree with the two-sided
integral over the line of the even extension.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PRESETS = ("tent", "smoothed_indicator", "bump_sum", "random_pl", "parabola")


def unit_ball_volume(d: int) -> float:
    """Volume omega_d of the unit ball in R^d."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def sphere_measure(d: int) -> float:
    """Surface measure d * omega_d of the unit sphere in R^d."""
    return d * unit_ball_volume(d)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Radial profile f~ of a compactly supported function on R^d.

    ``nodes`` starts at 0 and ends at ``t_max``; it is uniform with spacing
    ``h`` unless nodes were inserted (see :func:`modulus`). With
    ``step=True`` the profile is piecewise constant, ``values[k]`` holding
    the value on ``[nodes[k], nodes[k+1])``; this is how derivative
    profiles are represented.
    """

    d: int
    h: float
    nodes: np.ndarray
    values: np.ndarray
    step: bool = False

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes))
        object.__setattr__(self, "values", _frozen(self.values))
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.nodes.ndim != 1 or self.nodes.shape != self.values.shape:
            raise ValueError("nodes and values must be 1-d arrays of equal length")
        if len(self.nodes) < 3:
            raise ValueError("a profile needs at least 3 nodes")
        if self.nodes[0] != 0.0 or np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must start at 0 and increase strictly")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("profile samples must be finite")
        if not self.step and self.values[-1] != 0.0:
            raise ValueError("profile must vanish at t_max (compact support)")

    @property
    def t_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def n(self) -> int:
        return len(self.nodes) - 1

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.step:
            k = np.clip(np.searchsorted(self.nodes, t, side="right") - 1, 0, self.n)
            out = self.values[k]
            return np.where((t >= 0) & (t <= self.t_max), out, 0.0)
        return np.interp(t, self.nodes, self.values, left=self.values[0], right=0.0)

    def support_end(self) -> float:
        """Smallest node beyond which the profile vanishes."""
        nz = np.nonzero(self.values)[0]
        if len(nz) == 0:
            return 0.0
        k = nz[-1]
        if self.step:
            return float(self.nodes[min(k + 1, self.n)])
        return float(self.nodes[min(k + 1, self.n)])

    def scaled(self, c: float) -> "RadialProfile":
        return RadialProfile(self.d, self.h, self.nodes, c * self.values, self.step)

    def __add__(self, other: "RadialProfile") -> "RadialProfile":
        return combine(self, other, 1.0, 1.0)

    def __sub__(self, other: "RadialProfile") -> "RadialProfile":
        return combine(self, other, 1.0, -1.0)

    def __neg__(self) -> "RadialProfile":
        return self.scaled(-1.0)

    def __mul__(self, c: float) -> "RadialProfile":
        return self.scaled(float(c))

    __rmul__ = __mul__

    def digest(self) -> str:
        """Content hash identifying the profile."""
        m = hashlib.sha256()
        m.update(f"d={self.d};h={self.h!r};step={self.step};".encode())
        m.update(np.ascontiguousarray(self.nodes, dtype="<f8").tobytes())
        m.update(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        return m.hexdigest()[:16]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, v in zip(self.nodes, self.values):
            w.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, d: int, h: float | None = None) -> "RadialProfile":
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["t", "value"]:
            raise ValueError("expected header 't,value'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        nodes = data[:, 0]
        if h is None:
            h = float(np.min(np.diff(nodes)))
        return cls(d, h, nodes, data[:, 1])


def combine(f: RadialProfile, g: RadialProfile, a: float, b: float) -> RadialProfile:
    """Return a*f + b*g, merging node sets when they differ."""
    if f.d != g.d or f.step != g.step:
        raise ValueError("profiles must share dimension and interpolation kind")
    if len(f.nodes) == len(g.nodes) and np.array_equal(f.nodes, g.nodes):
        return RadialProfile(f.d, f.h, f.nodes, a * f.values + b * g.values, f.step)
    if f.step:
        raise ValueError("step profiles must share nodes")
    nodes = np.union1d(f.nodes, g.nodes)
    return RadialProfile(f.d, min(f.h, g.h), nodes, a * f(nodes) + b * g(nodes))


def uniform_nodes(h: float, t_max: float) -> np.ndarray:
    n = int(round(t_max / h))
    if n < 2 or not math.isclose(n * h, t_max, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"t_max={t_max} must be a multiple (>= 2) of h={h}")
    return np.arange(n + 1) * h


def make_profile(preset: str, params: dict | None = None, grid=(2, 0.01, 2.0),
                 seed: int | None = None) -> RadialProfile:
    """Build a profile from a named preset on the grid ``(d, h, t_max)``.

    Presets: ``tent(a)``, ``smoothed_indicator(a, ramp)``,
    ``bump_sum(bumps=[(center, width, height), ...])``,
    ``random_pl(n_knots, support)`` (needs ``seed``) and ``parabola(a)``.
    """
    params = dict(params or {})
    d, h, t_max = grid
    d = int(d)
    t = uniform_nodes(h, t_max)

    if preset == "tent":
        a = float(params.get("a", 1.0))
        _check_reach(a, t_max)
        v = np.maximum(0.0, 1.0 - t / a)
    elif preset == "parabola":
        a = float(params.get("a", 1.0))
        _check_reach(a, t_max)
        v = np.maximum(0.0, 1.0 - (t / a) ** 2)
    elif preset == "smoothed_indicator":
        a = float(params.get("a", 1.0))
        ramp = float(params.get("ramp", 0.1))
        if ramp < 0:
            raise ValueError("ramp must be >= 0")
        _check_reach(a + ramp, t_max)
        if ramp == 0:
            v = (t <= a + 1e-12 * h).astype(float)
        else:
            v = np.clip((a + ramp - t) / ramp, 0.0, 1.0)
    elif preset == "bump_sum":
        v = np.zeros_like(t)
        for center, width, height in params.get("bumps", []):
            _check_reach(center + width, t_max)
            v = v + height * np.maximum(0.0, 1.0 - np.abs(t - center) / width)
    elif preset == "random_pl":
        if seed is None:
            raise ValueError("random_pl requires a seed")
        n_knots = int(params.get("n_knots", 5))
        support = float(params.get("support", 0.75 * t_max))
        _check_reach(support, t_max)
        rng = np.random.default_rng(seed)
        kt = np.sort(rng.uniform(0.0, support, n_knots))
        kv = rng.uniform(-1.0, 1.0, n_knots)
        xs = np.concatenate([[0.0], kt, [support]])
        ys = np.concatenate([[rng.uniform(-1.0, 1.0)], kv, [0.0]])
        v = np.interp(t, xs, ys, right=0.0)
    else:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    v[-1] = 0.0
    return RadialProfile(d, h, t, v)


def _check_reach(reach: float, t_max: float) -> None:
    if reach > t_max + 1e-12:
        raise ValueError(f"preset reaches t={reach} beyond t_max={t_max}")


def zero_profile(d: int, h: float, t_max: float) -> RadialProfile:
    t = uniform_nodes(h, t_max)
    return RadialProfile(d, h, t, np.zeros_like(t))


# -- norms -----------------------------------------------------------------

def _segment_power_integral(a, b, k):
    """Integral of t^k over [a, b], elementwise."""
    return (b ** (k + 1) - a ** (k + 1)) / (k + 1)


def lp_norm(f: RadialProfile, p: float = 1.0) -> float:
    """L^p(R^d) norm of the radial function with profile ``f``.

    Sign changes are resolved first so that |f~| is linear on every
    segment. For p = 1 each segment is integrated in closed form; other
    exponents use Simpson's rule on the endpoints and midpoint.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if math.isinf(p):
        return float(np.max(np.abs(f.values)))
    g = modulus(f)
    a, b = g.nodes[:-1], g.nodes[1:]
    k = g.d - 1
    if g.step:
        seg = np.abs(g.values[:-1]) ** p * _segment_power_integral(a, b, k)
    elif p == 1:
        slope = np.diff(g.values) / (b - a)
        seg = ((g.values[:-1] - slope * a) * _segment_power_integral(a, b, k)
               + slope * _segment_power_integral(a, b, k + 1))
    else:
        m = 0.5 * (a + b)
        fa, fb = g.values[:-1], g.values[1:]
        fm = 0.5 * (fa + fb)
        seg = (b - a) / 6.0 * (fa ** p * a ** k + 4.0 * fm ** p * m ** k + fb ** p * b ** k)
    total = sphere_measure(f.d) * float(np.sum(seg))
    return total ** (1.0 / p)


def weak_derivative(f: RadialProfile) -> RadialProfile:
    """Profile of f~' as right-hand slopes; the last node repeats the left slope."""
    if f.step:
        raise ValueError("derivative of a step profile is not a function")
    slopes = np.diff(f.values) / np.diff(f.nodes)
    return RadialProfile(f.d, f.h, f.nodes, np.append(slopes, slopes[-1]), step=True)


def grad_l1(f: RadialProfile) -> float:
    """||grad f||_{L^1(R^d)}, integrated exactly segment by segment."""
    g = weak_derivative(f)
    a, b = g.nodes[:-1], g.nodes[1:]
    seg = np.abs(g.values[:-1]) * _segment_power_integral(a, b, f.d - 1)
    return sphere_measure(f.d) * float(np.sum(seg))


def modulus(f: RadialProfile) -> RadialProfile:
    """|f| as a profile; zero crossings inside segments become new nodes."""
    if f.step:
        return RadialProfile(f.d, f.h, f.nodes, np.abs(f.values), step=True)
    t, v = f.nodes, f.values
    flip = np.nonzero(v[:-1] * v[1:] < 0)[0]
    if len(flip) == 0:
        return RadialProfile(f.d, f.h, t, np.abs(v))
    lam = v[flip] / (v[flip] - v[flip + 1])
    tz = t[flip] + lam * (t[flip + 1] - t[flip])
    nodes = np.insert(t, flip + 1, tz)
    vals = np.insert(np.abs(v), flip + 1, 0.0)
    keep = np.concatenate([[True], np.diff(nodes) > 0])
    return RadialProfile(f.d, f.h, nodes[keep], vals[keep])


@dataclass(frozen=True)
class NormReport:
    l1: float
    lp: float
    linf: float
    grad_l1: float
    w11: float
    p: float
    q: float | None = None


def norm_report(f: RadialProfile, p: float = 2.0, beta: float | None = None) -> NormReport:
    """Collect the standard norms of ``f``; ``q`` is d/(d-beta) when beta is given."""
    l1 = lp_norm(f, 1.0)
    gl1 = grad_l1(f)
    q = f.d / (f.d - beta) if beta is not None else None
    return NormReport(l1, lp_norm(f, p), lp_norm(f, math.inf), gl1, l1 + gl1, p, q)


def w11_distance(f: RadialProfile, g: RadialProfile) -> float:
    diff = f - g
    return lp_norm(diff, 1.0) + grad_l1(diff)


# -- functions on the line -------------------------------------------------

@dataclass(frozen=True, eq=False)
class LineFunction:
    """Piecewise-linear function on R, zero outside ``[x_min, x_max]``."""

    x_min: float
    h: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.ndim != 1 or len(self.values) < 3:
            raise ValueError("need at least 3 samples")
        if self.values[0] != 0.0 or self.values[-1] != 0.0:
            raise ValueError("endpoint samples must be 0")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("samples must be finite")
        if self.h <= 0:
            raise ValueError("spacing must be positive")

    @property
    def x_max(self) -> float:
        return self.x_min + (len(self.values) - 1) * self.h

    @property
    def x(self) -> np.ndarray:
        return self.x_min + np.arange(len(self.values)) * self.h

    def scaled(self, c: float) -> "LineFunction":
        return LineFunction(self.x_min, self.h, c * self.values)

    def l1(self) -> float:
        g = _line_modulus_integral(self.values, self.h)
        return float(g)

    def grad_l1(self) -> float:
        return float(np.sum(np.abs(np.diff(self.values))))


def _line_modulus_integral(v: np.ndarray, h: float) -> float:
    a, b = v[:-1], v[1:]
    same = a * b >= 0
    seg = np.where(same, 0.5 * h * np.abs(a + b),
                   0.5 * h * (a * a + b * b) / np.where(same, 1.0, np.abs(a - b)))
    return float(np.sum(seg))


def make_line(knots_x: Sequence[float], knots_y: Sequence[float], h: float,
              pad: float = 0.0) -> LineFunction:
    """Sample the polygon through the knots on a grid of spacing ``h``.

    The first and last knot must have value 0. ``pad`` extends the grid by
    zeros on both sides (rounded to whole cells).
    """
    kx = np.asarray(knots_x, dtype=float)
    ky = np.asarray(knots_y, dtype=float)
    if ky[0] != 0 or ky[-1] != 0:
        raise ValueError("end knots must be 0")
    npad = int(math.ceil(pad / h - 1e-9))
    i0 = math.floor(kx[0] / h + 1e-9) - npad
    i1 = math.ceil(kx[-1] / h - 1e-9) + npad
    x = np.arange(i0, i1 + 1) * h
    y = np.interp(x, kx, ky, left=0.0, right=0.0)
    y[0] = y[-1] = 0.0
    return LineFunction(i0 * h, h, y)


def random_line(seed: int, h: float, n_knots: int = 6, width: float = 2.0,
                pad: float = 3.0) -> LineFunction:
    """Seeded random polygon supported in [-width/2, width/2]."""
    rng = np.random.default_rng(seed)
    inner = np.sort(rng.uniform(-width / 2, width / 2, n_knots))
    kx = np.concatenate([[-width / 2], inner, [width / 2]])
    ky = np.concatenate([[0.0], rng.uniform(-1.0, 1.0, n_knots), [0.0]])
    return make_line(kx, ky, h, pad=pad)
