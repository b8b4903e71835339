"""Brute-force fractional maximal function on a square 2D grid.

No radial reduction: ball averages are masked sums over lattice cells whose
centres lie in the ball, divided by the number of such cells, and the
supremum runs over centres on a strided sub-grid and a finite radius set.
Used only to cross-check the (s, r) pipeline.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, signal

from .maximal import MaximalResult
from .profiles import RadialProfile


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Samples on [-L, L]^2 with spacing h2; samples[i, j] sits at (x_j, y_i)."""

    L: float
    h2: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = int(round(2 * self.L / self.h2)) + 1
        if not math.isclose((n - 1) * self.h2, 2 * self.L, rel_tol=1e-9):
            raise ValueError("2L must be a multiple of h2")
        a = np.asarray(self.samples, dtype=float)
        if a.shape != (n, n):
            raise ValueError(f"samples must have shape {(n, n)}, got {a.shape}")
        edge = np.concatenate([a[0], a[-1], a[:, 0], a[:, -1]])
        if np.any(edge != 0):
            raise ValueError("boundary samples must be 0")
        object.__setattr__(self, "samples", a)

    d = 2

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def axis(self) -> np.ndarray:
        return _axis(self.n, self.h2)

    def l1(self) -> float:
        return float(np.abs(self.samples).sum() * self.h2 ** 2)

    def ray(self, angle: float, radii) -> np.ndarray:
        """Bilinear samples along the ray at ``angle`` (radians) from the origin."""
        radii = np.asarray(radii, dtype=float)
        c = self.L / self.h2
        rows = c + radii * math.sin(angle) / self.h2
        cols = c + radii * math.cos(angle) / self.h2
        return ndimage.map_coordinates(self.samples, [rows, cols], order=1, mode="constant")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "value"])
        ax = self.axis
        for i in range(self.n):
            for j in range(self.n):
                w.writerow([repr(float(ax[j])), repr(float(ax[i])), repr(float(self.samples[i, j]))])
        return buf.getvalue()


def _axis(n: int, h2: float) -> np.ndarray:
    # integer offsets keep the axis exactly symmetric about 0
    return (np.arange(n) - n // 2) * h2


def rasterize_radial(f: RadialProfile, L: float, h2: float) -> Grid2D:
    if f.d != 2:
        raise ValueError(f"the 2D oracle needs d = 2, got d = {f.d}")
    if L < f.t_max:
        raise ValueError("L must be at least the profile's t_max")
    n = int(round(2 * L / h2)) + 1
    ax = _axis(n, h2)
    rho = np.hypot(ax[None, :], ax[:, None])
    vals = f(np.minimum(rho, f.t_max))
    vals[rho >= f.t_max] = 0.0
    vals[0] = vals[-1] = 0.0
    vals[:, 0] = vals[:, -1] = 0.0
    return Grid2D(L, h2, vals)


def default_radius_set(h2: float, r_top: float) -> np.ndarray:
    """Multiples of h2/2 up to r_top.

    Integer multiples let axis points sit exactly on a ball boundary; the
    half-integer ones halve the radius spacing seen along other directions,
    and h2/2 itself is the one-cell ball (the small-radius limit for beta = 0).
    """
    k = np.arange(1, 2 * int(math.ceil(r_top / h2)) + 1)
    return 0.5 * k * h2


def _disk(r: float, h2: float) -> np.ndarray:
    m = int(math.floor(r / h2 + 1e-9))
    o = np.arange(-m, m + 1) * h2
    return (o[None, :] ** 2 + o[:, None] ** 2) <= r * r * (1 + 1e-12)


@dataclass(frozen=True, eq=False)
class OracleResult:
    beta: float
    grid: Grid2D
    best_radius: np.ndarray = field(repr=False)


def oracle_maximal_2d(g: Grid2D, beta: float, center_stride: int = 1, radius_set=None) -> OracleResult:
    """max over centres z (every ``center_stride``-th node) and r in ``radius_set``
    of r^beta * mean of |g| over lattice cells in B(z, r), for all B(z, r) containing x."""
    if radius_set is None:
        radius_set = default_radius_set(g.h2, g.L)
    radii = np.asarray(radius_set, dtype=float)
    if radii.size == 0:
        raise ValueError("radius set is empty")
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    if center_stride < 1:
        raise ValueError("center_stride must be >= 1")
    a = np.abs(g.samples)
    n = g.n
    is_centre = np.zeros((n, n), dtype=bool)
    mid = n // 2
    is_centre[mid % center_stride::center_stride, mid % center_stride::center_stride] = True
    out = np.zeros((n, n))
    best_r = np.zeros((n, n))
    for r in np.sort(radii):
        disk = _disk(r, g.h2)
        sums = signal.fftconvolve(a, disk.astype(float), mode="same")
        means = np.where(is_centre, r ** beta * np.maximum(sums, 0.0) / disk.sum(), 0.0)
        reach = ndimage.maximum_filter(means, footprint=disk, mode="constant", cval=0.0)
        better = reach > out
        out = np.where(better, reach, out)
        best_r = np.where(better, r, best_r)
    # FFT round-off on empty regions
    out[out < 1e-14 * max(out.max(), 1e-300)] = 0.0
    field_ = np.array(out)
    field_[0] = field_[-1] = 0.0
    field_[:, 0] = field_[:, -1] = 0.0
    return OracleResult(float(beta), Grid2D(g.L, g.h2, field_), best_r)


@dataclass(frozen=True, eq=False)
class GapStats:
    t: np.ndarray = field(repr=False)
    oracle: np.ndarray = field(repr=False)
    radial: np.ndarray = field(repr=False)
    rel_gap: np.ndarray = field(repr=False)

    @property
    def max_gap(self) -> float:
        return float(self.rel_gap.max()) if self.rel_gap.size else 0.0

    @property
    def median_gap(self) -> float:
        return float(np.median(self.rel_gap)) if self.rel_gap.size else 0.0

    def summary(self) -> str:
        return f"oracle gap: max={self.max_gap:.4g} median={self.median_gap:.4g} points={self.rel_gap.size}"


def compare_with_radial(oracle_out: OracleResult, radial_result: MaximalResult,
                        t_max: float | None = None) -> GapStats:
    """Relative gap along the positive x-axis (interior nodes up to ``t_max``).

    The boundary ring is excluded since the oracle field is zero there by
    construction.
    """
    if not math.isclose(oracle_out.beta, radial_result.variant.beta, abs_tol=1e-12):
        raise ValueError(f"beta mismatch: oracle {oracle_out.beta} vs radial {radial_result.variant.beta}")
    g = oracle_out.grid
    mid = g.n // 2
    t = g.axis[mid:-1]
    top = float(radial_result.eval_grid[-1]) if t_max is None else t_max
    keep = t <= top + 1e-12
    t = t[keep]
    o = g.samples[mid, mid:-1][keep]
    r = np.interp(t, radial_result.eval_grid, radial_result.values)
    denom = np.maximum(np.abs(r), 1e-300)
    gap = np.where(o == r, 0.0, np.abs(o - r) / denom)
    return GapStats(t, o, r, gap)
