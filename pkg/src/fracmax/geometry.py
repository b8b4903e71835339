"""Ball averages of radial functions through spherical-cap kernels.

The mean of a radial function over B(z, r) only depends on s = |z| and r:

    mean = d / r^d * int_0^{s+r} |f~(u)| u^(d-1) cap(u; s, r) du,

where cap(u; s, r) is the fraction of the sphere |y| = u inside the ball.
The same reduction with the first angular moment of the cap gives the
component along z of the mean of a radial vector field g(|y|) y/|y|.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from . import _kernels as K
from .profiles import RadialProfile, lp_norm, modulus, unit_ball_volume


@dataclass(frozen=True)
class CapKernelContext:
    """Dimension-dependent constants of the cap kernels."""

    d: int
    c_d: float = field(init=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.d == 1:
            cd = 1.0
        else:
            # int_0^pi sin^(d-2)
            cd = math.sqrt(math.pi) * math.gamma((self.d - 1) / 2) / math.gamma(self.d / 2)
        object.__setattr__(self, "c_d", cd)

    @property
    def omega(self) -> float:
        return unit_ball_volume(self.d)


def _check_radii(u, r):
    if np.any(np.asarray(u) <= 0) or np.any(np.asarray(r) <= 0):
        raise ValueError("sphere radius u and ball radius r must be positive")


def cap_fraction(u, s, r, ctx: CapKernelContext):
    """Fraction of the sphere |y| = u lying in B(z, r) with |z| = s."""
    _check_radii(u, r)
    u, s, r = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (u, s, r)))
    out = np.array([K.cap_fraction_scalar(a, b, c, ctx.d, ctx.c_d)
                    for a, b, c in zip(u.ravel(), s.ravel(), r.ravel())])
    return out.reshape(u.shape)[()] if u.ndim else float(out[0])


def directional_cap_moment(u, s, r, ctx: CapKernelContext):
    """Mean of cos(angle to z) over the part of the sphere |y| = u inside the ball.

    The average is taken with respect to the whole sphere, so the value is 0
    both when the sphere is fully inside and when it misses the ball.
    """
    _check_radii(u, r)
    if ctx.d >= 2 and np.any(np.asarray(s) <= 0):
        raise ValueError("direction towards the centre is undefined for s = 0")
    u, s, r = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (u, s, r)))
    out = np.array([K.cap_moment_scalar(a, b, c, ctx.d, ctx.c_d)
                    for a, b, c in zip(u.ravel(), s.ravel(), r.ravel())])
    return out.reshape(u.shape)[()] if u.ndim else float(out[0])


class _Prepared:
    """Arrays of a profile ready for the compiled kernels."""

    def __init__(self, g: RadialProfile, extra: int = 0):
        self.nodes = np.ascontiguousarray(g.nodes)
        self.vals = np.ascontiguousarray(g.values)
        self.step = bool(g.step)
        self.d = g.d
        self.extra = extra
        self.prefix = K.poly_prefix(self.nodes, self.vals, self.step, g.d - 1 + extra)

    def integral(self, s, r, kind, ctx):
        return K.radial_integral(self.nodes, self.vals, self.step, self.d, self.extra,
                                 self.prefix, float(s), float(r), kind, ctx.c_d)


def _ctx_for(f: RadialProfile, ctx: CapKernelContext | None) -> CapKernelContext:
    ctx = ctx or CapKernelContext(f.d)
    if ctx.d != f.d:
        raise ValueError(f"context dimension {ctx.d} != profile dimension {f.d}")
    return ctx


def ball_average(f: RadialProfile, s: float, r: float, ctx: CapKernelContext | None = None) -> float:
    """Mean of |f| over any ball of radius r whose centre has norm s."""
    if r <= 0:
        raise ValueError("ball radius must be positive")
    ctx = _ctx_for(f, ctx)
    prep = _Prepared(modulus(f))
    return ctx.d * prep.integral(s, r, K.CAP, ctx) / r ** ctx.d


def directional_ball_average(g: RadialProfile, s: float, r: float,
                             ctx: CapKernelContext | None = None) -> float:
    """Outward component of the mean of g(|y|) y/|y| over B(z, r), |z| = s.

    ``g`` is typically a derivative profile from ``weak_derivative``. By
    symmetry the value is 0 for s = 0.
    """
    if r <= 0:
        raise ValueError("ball radius must be positive")
    ctx = _ctx_for(g, ctx)
    if s < 0:
        raise ValueError("centre norm must be >= 0")
    if s == 0:
        return 0.0
    prep = _Prepared(g)
    return ctx.d * prep.integral(s, r, K.MOMENT, ctx) / r ** ctx.d


def weighted_ball_average(g: RadialProfile, s: float, r: float, weight_power: int,
                          ctx: CapKernelContext | None = None) -> float:
    """Mean over B(z, r) of |g(|y|)| * |y|^weight_power."""
    if r <= 0:
        raise ValueError("ball radius must be positive")
    ctx = _ctx_for(g, ctx)
    prep = _Prepared(modulus(g), extra=weight_power)
    return ctx.d * prep.integral(s, r, K.CAP, ctx) / r ** ctx.d


def lens_volume(u, s, r, d: int):
    """|B(0, u) ∩ B(z, r)| with |z| = s, in closed form.

    Two spherical caps cut by the radical hyperplane; cap volumes use the
    regularized incomplete beta function. Used as an independent check of
    the cap-fraction quadrature.
    """
    u, s, r = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (u, s, r)))
    w = unit_ball_volume(d)

    def cap(R, hgt):
        hgt = np.clip(hgt, 0.0, 2 * R)
        small = np.minimum(hgt, 2 * R - hgt)
        x = np.clip((2 * R * small - small ** 2) / np.where(R > 0, R ** 2, 1.0), 0.0, 1.0)
        v = 0.5 * w * R ** d * special.betainc((d + 1) / 2, 0.5, x)
        return np.where(hgt <= R, v, w * R ** d - v)

    safe_s = np.where(s > 0, s, 1.0)
    a = (s ** 2 + u ** 2 - r ** 2) / (2 * safe_s)
    partial = cap(u, u - a) + cap(r, r - (s - a))
    out = np.where(u + s <= r, w * u ** d,
                   np.where(r + s <= u, w * r ** d,
                            np.where(u + r <= s, 0.0, partial)))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class AverageTable:
    """A[i, k] = r_k^beta * (mean of |f| over balls with centre norm s_i, radius r_k)."""

    beta: float
    s_grid: np.ndarray
    r_grid: np.ndarray
    values: np.ndarray
    f_ref: str
    d: int
    f_l1: float
    f_linf: float
    support_end: float

    def column(self, r_index: int) -> np.ndarray:
        return self.values[:, r_index]

    def grid_hash(self) -> str:
        return _grid_hash(self.s_grid, self.r_grid)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "r", "value"])
        for i, s in enumerate(self.s_grid):
            for k, r in enumerate(self.r_grid):
                w.writerow([repr(float(s)), repr(float(r)), repr(float(self.values[i, k]))])
        return buf.getvalue()


def _grid_hash(s_grid, r_grid) -> str:
    m = hashlib.sha256()
    m.update(np.ascontiguousarray(s_grid, dtype="<f8").tobytes())
    m.update(b"|")
    m.update(np.ascontiguousarray(r_grid, dtype="<f8").tobytes())
    return m.hexdigest()[:16]


def build_average_table(f: RadialProfile, beta: float, s_grid, r_grid,
                        ctx: CapKernelContext | None = None) -> AverageTable:
    ctx = _ctx_for(f, ctx)
    if not 0 <= beta < f.d:
        raise ValueError(f"beta must lie in [0, {f.d}), got {beta}")
    s_grid = np.ascontiguousarray(s_grid, dtype=float)
    r_grid = np.ascontiguousarray(r_grid, dtype=float)
    if np.any(np.diff(s_grid) <= 0) or np.any(np.diff(r_grid) <= 0):
        raise ValueError("grids must be strictly increasing")
    if s_grid[0] < 0 or r_grid[0] <= 0:
        raise ValueError("need s >= 0 and r > 0")
    g = modulus(f)
    prep = _Prepared(g)
    end = g.support_end()
    vals = K.average_table(prep.nodes, prep.vals, prep.step, ctx.d, prep.prefix,
                           s_grid, r_grid, float(beta), ctx.c_d, end)
    return AverageTable(float(beta), s_grid, r_grid, vals, f.digest(), f.d,
                        lp_norm(g, 1.0), float(np.max(np.abs(g.values))), end)


# -- binary cache ------------------------------------------------------------

_MAGIC = b"FMXT"


def table_cache_key(f: RadialProfile, beta: float, s_grid, r_grid) -> str:
    return f"{f.digest()}-{beta!r}-{_grid_hash(s_grid, r_grid)}"


def save_table(table: AverageTable, path) -> None:
    """Write the table as little-endian float64 with a small header."""
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIId", 1, len(table.s_grid), len(table.r_grid), table.beta))
        fh.write(struct.pack("<Iddd", table.d, table.f_l1, table.f_linf, table.support_end))
        ref = table.f_ref.encode()
        fh.write(struct.pack("<I", len(ref)))
        fh.write(ref)
        fh.write(np.ascontiguousarray(table.s_grid, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(table.r_grid, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(table.values, dtype="<f8").tobytes())


def load_table(path) -> AverageTable:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError("not an average-table cache file")
    off = 4
    version, ns, nr, beta = struct.unpack_from("<IIId", data, off)
    off += struct.calcsize("<IIId")
    if version != 1:
        raise ValueError(f"unsupported cache version {version}")
    d, l1, linf, end = struct.unpack_from("<Iddd", data, off)
    off += struct.calcsize("<Iddd")
    (nref,) = struct.unpack_from("<I", data, off)
    off += 4
    ref = data[off:off + nref].decode()
    off += nref
    arr = np.frombuffer(data, dtype="<f8", offset=off)
    s_grid = arr[:ns].copy()
    r_grid = arr[ns:ns + nr].copy()
    values = arr[ns + nr:ns + nr + ns * nr].reshape(ns, nr).copy()
    return AverageTable(beta, s_grid, r_grid, values, ref, d, l1, linf, end)


def cached_table(f: RadialProfile, beta: float, s_grid, r_grid, cache_dir=None,
                 ctx: CapKernelContext | None = None) -> AverageTable:
    """Build a table, reusing a cache file under ``cache_dir`` when present."""
    if cache_dir is None:
        return build_average_table(f, beta, s_grid, r_grid, ctx)
    path = Path(cache_dir) / (table_cache_key(f, beta, s_grid, r_grid) + ".bin")
    if path.exists():
        return load_table(path)
    table = build_average_table(f, beta, s_grid, r_grid, ctx)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_table(table, path)
    return table
