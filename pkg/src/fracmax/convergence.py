"""Convergence experiments for f_j -> f in W^{1,1}.

Sequences are generated inside the piecewise-linear class so that every
distance is computed exactly. The derivative of M_beta f_j is always the
finite-difference derivative on a fixed evaluation grid, and L^q norms use
the radial measure d omega_d t^(d-1) dt with the trapezoid rule.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .derivatives import fd_gradient
from .maximal import LineFunction, maximal_1d, maximal_profile
from .profiles import (RadialProfile, grad_l1, lp_norm, make_profile, modulus, sphere_measure,
                       w11_distance)

SEQUENCE_KINDS = ("amplitude", "mollify", "translate", "node_jitter")


@dataclass(frozen=True)
class SequenceSpec:
    """f_j for j = 1..j_max with prescribed decay rate_j = rate0 * 2^(-j).

    amplitude: f + rate_j * g (``g`` defaults to tent(0.5) on f's grid);
    mollify: moving average over a window of width scale * rate_j;
    translate: f~(t - scale * rate_j) pushed outward;
    node_jitter: fixed seeded node noise scaled to W^{1,1} size rate_j.

    With ``scale=None`` the mollify/translate scale is calibrated so that the
    last distance equals rate_jmax.
    """

    kind: str = "amplitude"
    j_max: int = 8
    rate0: float = 1.0
    scale: float | None = None
    seed: int = 0
    g: RadialProfile | None = None

    def __post_init__(self):
        if self.kind not in SEQUENCE_KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        if self.j_max < 0:
            raise ValueError("j_max must be >= 0")

    def rate(self, j: int) -> float:
        return self.rate0 * 2.0 ** (-j)


class SequenceError(RuntimeError):
    """The generator did not produce W^{1,1}-decreasing distances."""


def _even_prefix(f: RadialProfile):
    # antiderivative of the even extension, as a function of signed t
    t, v = f.nodes, f.values
    seg = 0.5 * (v[:-1] + v[1:]) * np.diff(t)
    F = np.concatenate([[0.0], np.cumsum(seg)])

    def prim(x):
        x = np.asarray(x, dtype=float)
        ax = np.minimum(np.abs(x), t[-1])
        k = np.clip(np.searchsorted(t, ax, side="right") - 1, 0, len(t) - 2)
        dx = ax - t[k]
        slope = (v[k + 1] - v[k]) / (t[k + 1] - t[k])
        val = F[k] + v[k] * dx + 0.5 * slope * dx * dx
        return np.sign(x) * val

    return prim


def mollify(f: RadialProfile, width: float) -> RadialProfile:
    """Moving average of the even extension over [t - w/2, t + w/2], sampled at the nodes."""
    if width <= 0:
        return f
    if f.support_end() + width / 2 >= f.t_max:
        raise SequenceError("mollification window spills past t_max")
    prim = _even_prefix(f)
    t = f.nodes
    vals = (prim(t + width / 2) - prim(t - width / 2)) / width
    vals[-1] = 0.0
    return RadialProfile(f.d, f.h, t, vals)


def translate(f: RadialProfile, delta: float) -> RadialProfile:
    if f.support_end() + delta >= f.t_max:
        raise SequenceError("translation pushes the support past t_max")
    t = f.nodes
    vals = f(np.maximum(t - delta, 0.0))
    vals[-1] = 0.0
    return RadialProfile(f.d, f.h, t, vals)


def make_sequence(f: RadialProfile, spec: SequenceSpec):
    """Return (profiles f_1..f_jmax, their W^{1,1} distances to f)."""
    seq = []
    if spec.kind == "amplitude":
        g = spec.g or make_profile("tent", {"a": min(0.5, f.t_max)}, (f.d, f.h, f.t_max))
        for j in range(1, spec.j_max + 1):
            seq.append(f + spec.rate(j) * g)
    elif spec.kind in ("mollify", "translate"):
        op = mollify if spec.kind == "mollify" else translate
        scale = spec.scale
        if scale is None and spec.j_max > 0:
            # calibrate at the smallest step, where the distance is linear in the window
            last = spec.rate(spec.j_max)
            probe = w11_distance(op(f, last), f)
            scale = 1.0 if probe == 0 else last / probe
        for j in range(1, spec.j_max + 1):
            seq.append(op(f, scale * spec.rate(j)))
    else:
        rng = np.random.default_rng(spec.seed)
        xi = rng.uniform(-1.0, 1.0, len(f.nodes))
        xi[-1] = 0.0
        unit = RadialProfile(f.d, f.h, f.nodes, xi)
        size = lp_norm(unit, 1.0) + grad_l1(unit)
        for j in range(1, spec.j_max + 1):
            seq.append(f + (spec.rate(j) / size) * unit)
    dists = np.array([w11_distance(fj, f) for fj in seq])
    rates = np.array([spec.rate(j) for j in range(1, spec.j_max + 1)])
    if len(dists) > 1 and np.any(dists > 0):
        if np.any(np.diff(dists) >= 0):
            raise SequenceError(f"W11 distances not strictly decreasing: {dists}")
    if np.any(dists > 4 * rates * (1 + 1e-12)):
        raise SequenceError(f"W11 distances exceed 4*rate: {dists} vs {rates}")
    return seq, dists


# -- main experiment ---------------------------------------------------------------

def radial_weights(ts: np.ndarray, d: int) -> np.ndarray:
    """Trapezoid weights for d omega_d int g(t) t^(d-1) dt on the grid ``ts``."""
    w = np.zeros_like(ts)
    dt = np.diff(ts)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return sphere_measure(d) * w * ts ** (d - 1)


def lq_radial(values: np.ndarray, ts: np.ndarray, d: int, q: float) -> float:
    return float(np.sum(radial_weights(ts, d) * np.abs(values) ** q)) ** (1.0 / q)


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    beta: float
    q: float
    variant: str
    eval_grid: np.ndarray = field(repr=False)
    w11_dist: np.ndarray
    lq_grad_dist: np.ndarray
    bl_integral: np.ndarray
    bl_reference: float
    grad_norm: float
    sup_dist: np.ndarray
    tail_radii: tuple
    tail_mass: np.ndarray  # shape (j_max, len(tail_radii))
    modulus_w11_dist: np.ndarray
    sample_t: np.ndarray = field(repr=False)
    sample_grad: np.ndarray = field(repr=False)  # (j_max, n_samples)
    sample_value: np.ndarray = field(repr=False)
    reference_grad: np.ndarray = field(repr=False)
    reference_value: np.ndarray = field(repr=False)
    final_fraction: float = 0.05

    @property
    def j_max(self) -> int:
        return len(self.w11_dist)

    @property
    def decreasing(self) -> bool:
        x = self.lq_grad_dist
        return bool(np.all((np.diff(x) < 0) | ((x[1:] == 0) & (x[:-1] == 0))))

    @property
    def converges(self) -> bool:
        if self.j_max == 0:
            return True
        final = self.lq_grad_dist[-1]
        return self.decreasing and final <= self.final_fraction * self.grad_norm + 1e-15

    @property
    def verdict(self) -> str:
        return "converges" if self.converges else "flagged"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "w11_dist", "lq_grad_dist", "bl_integral", "sup_dist", "tail_mass"])
        for j in range(self.j_max):
            tail = self.tail_mass[j, 0] if self.tail_mass.shape[1] else 0.0
            w.writerow([j + 1] + [repr(float(x)) for x in (
                self.w11_dist[j], self.lq_grad_dist[j], self.bl_integral[j], self.sup_dist[j], tail)])
        return buf.getvalue()

    def to_long_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "metric", "value"])
        for j in range(self.j_max):
            for name in ("w11_dist", "lq_grad_dist", "bl_integral", "sup_dist", "modulus_w11_dist"):
                w.writerow([j + 1, name, repr(float(getattr(self, name)[j]))])
            for k, rad in enumerate(self.tail_radii):
                w.writerow([j + 1, f"tail_mass_K{rad!r}", repr(float(self.tail_mass[j, k]))])
        return buf.getvalue()

    def summary(self) -> str:
        last = self.lq_grad_dist[-1] if self.j_max else 0.0
        return (f"convergence[{self.variant},beta={self.beta}]: verdict={self.verdict} "
                f"final_lq_grad_dist={last:.4g} grad_norm={self.grad_norm:.4g} "
                f"ratio={last / max(self.grad_norm, 1e-300):.4g}")


def _sample_indices(n: int, n_samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    interior = np.arange(1, n - 1)
    k = min(n_samples, len(interior))
    return np.sort(rng.choice(interior, size=k, replace=False))


def run_convergence(f: RadialProfile, spec: SequenceSpec, beta: float,
                    variant: str = "noncentered", eval_top: float | None = None,
                    step: float | None = None, tail_radii=(), n_samples: int = 32,
                    sample_seed: int = 20240601, sequence=None,
                    final_fraction: float = 0.05) -> ConvergenceReport:
    """Measure every convergence quantity along the sequence generated by ``spec``."""
    if not 0 <= beta < f.d:
        raise ValueError(f"beta must lie in [0, {f.d})")
    step = float(step or f.h)
    eval_top = float(eval_top or f.t_max)
    n = int(round(eval_top / step))
    ts = np.arange(n + 1) * step
    q = f.d / (f.d - beta)
    seq, dists = sequence if sequence is not None else make_sequence(f, spec)
    base = maximal_profile(f, beta, variant, ts, step)
    g0 = fd_gradient(base)
    wts = radial_weights(ts, f.d)
    bl_ref = float(np.sum(wts * np.abs(g0) ** q))
    grad_norm = bl_ref ** (1 / q)
    idx = _sample_indices(len(ts), n_samples, sample_seed)
    radii = tuple(float(k) for k in tail_radii)
    J = len(seq)
    lq = np.zeros(J)
    bl = np.zeros(J)
    sup = np.zeros(J)
    tails = np.zeros((J, len(radii)))
    mod = np.zeros(J)
    sg = np.zeros((J, len(idx)))
    sv = np.zeros((J, len(idx)))
    absf = modulus(f)
    for j, fj in enumerate(seq):
        res = maximal_profile(fj, beta, variant, ts, step)
        gj = fd_gradient(res)
        diff = np.abs(gj - g0) ** q
        lq[j] = float(np.sum(wts * diff)) ** (1 / q)
        bl[j] = float(np.sum(wts * np.abs(gj) ** q))
        sup[j] = float(np.max(np.abs(res.values - base.values)))
        for k, rad in enumerate(radii):
            sel = ts >= 3 * rad
            tails[j, k] = float(np.sum(wts[sel] * diff[sel]))
        mod[j] = w11_distance(modulus(fj), absf)
        sg[j] = gj[idx]
        sv[j] = res.values[idx]
    return ConvergenceReport(beta, q, variant, ts, dists, lq, bl, bl_ref, grad_norm, sup, radii,
                             tails, mod, ts[idx], sg, sv, g0[idx], base.values[idx], final_fraction)


@dataclass(frozen=True)
class BrezisLiebVerdict:
    integrals_converge: bool
    pointwise_fraction: float
    lq_converges: bool
    consistent: bool

    def summary(self) -> str:
        return (f"brezis_lieb: integrals_converge={self.integrals_converge} "
                f"pointwise_fraction={self.pointwise_fraction:.3f} "
                f"lq_converges={self.lq_converges} consistent={self.consistent}")


def brezis_lieb_diagnostic(report: ConvergenceReport, tol: float = 0.05,
                           point_fraction: float = 0.95) -> BrezisLiebVerdict:
    """Check that (integrals converge and gradients converge pointwise) iff L^q convergence."""
    if report.j_max == 0:
        return BrezisLiebVerdict(True, 1.0, True, True)
    gap = np.abs(report.bl_integral - report.bl_reference)
    scale = max(report.bl_reference, 1e-300)
    integrals = bool(gap[-1] <= tol * scale and gap[-1] <= gap[0] + 1e-15)
    gscale = max(np.max(np.abs(report.reference_grad)), 1e-300)
    vscale = max(np.max(np.abs(report.reference_value)), 1e-300)
    dg = np.abs(report.sample_grad[-1] - report.reference_grad)
    dv = np.abs(report.sample_value[-1] - report.reference_value)
    ok = (dg <= tol * gscale) & (dv <= tol * vscale)
    frac = float(np.mean(ok)) if len(ok) else 1.0
    lq = report.converges
    both = integrals and frac >= point_fraction
    return BrezisLiebVerdict(integrals, frac, lq, both == lq)


@dataclass(frozen=True)
class TailReport:
    radii: tuple
    reference_tail: np.ndarray
    reference_total: float
    tail_mass: np.ndarray
    epsilon: float
    j_eps: tuple
    monotone_in_k: bool
    uniformly_small: bool

    def summary(self) -> str:
        return (f"tail: radii={list(self.radii)} j_eps={list(self.j_eps)} "
                f"monotone_in_K={self.monotone_in_k} uniformly_small={self.uniformly_small}")


def tail_smallness(f: RadialProfile, spec: SequenceSpec, beta: float, k_radii,
                   eps_fraction: float = 0.01, variant: str = "noncentered",
                   step: float | None = None, eval_top: float | None = None) -> TailReport:
    """L^q mass of grad M f_j - grad M f beyond 3K, for each K in ``k_radii``.

    j_eps[K] is the first index (1-based) from which every tail stays below
    eps = eps_fraction * int |grad M f|^q; None when no such index exists.
    """
    radii = tuple(float(k) for k in k_radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("K radii must increase")
    eval_top = eval_top or 3 * radii[-1] + 2.0
    step = step or f.h
    fe = _extend(f, eval_top)
    rep = run_convergence(fe, spec, beta, variant, eval_top, step, radii,
                          sequence=_extend_sequence(f, spec, eval_top))
    ts = rep.eval_grid
    base = maximal_profile(fe, beta, variant, ts, step)
    g0 = np.abs(fd_gradient(base)) ** rep.q
    wts = radial_weights(ts, f.d)
    ref_tail = np.array([float(np.sum((wts * g0)[ts >= 3 * k])) for k in radii])
    total = float(np.sum(wts * g0))
    eps = eps_fraction * total
    j_eps = []
    for k in range(len(radii)):
        col = rep.tail_mass[:, k]
        above = np.nonzero(col >= eps)[0]
        if len(above) == 0:
            j_eps.append(1)
        elif above[-1] + 1 < len(col):
            j_eps.append(int(above[-1] + 2))
        else:
            j_eps.append(None)
    mono = bool(np.all(np.diff(rep.tail_mass, axis=1) <= 1e-15)) and bool(np.all(np.diff(ref_tail) <= 1e-15))
    small = all(j is not None for j in j_eps)
    return TailReport(radii, ref_tail, total, rep.tail_mass, eps, tuple(j_eps), mono, small)


def _extend(f: RadialProfile, top: float) -> RadialProfile:
    # longer zero tail so that the s-grid covers far evaluation points
    if f.t_max >= top:
        return f
    n = int(math.ceil((top - f.t_max) / f.h))
    extra = f.t_max + np.arange(1, n + 1) * f.h
    return RadialProfile(f.d, f.h, np.concatenate([f.nodes, extra]),
                         np.concatenate([f.values, np.zeros(n)]), f.step)


def _extend_sequence(f, spec, top):
    seq, dists = make_sequence(f, spec)
    return [_extend(fj, top) for fj in seq], dists


@dataclass(frozen=True)
class UniformReport:
    beta: float
    lp_dist: np.ndarray
    max_defect: np.ndarray
    sup_dist: np.ndarray
    violations: int

    @property
    def sup_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.sup_dist) <= 1e-15))

    def summary(self) -> str:
        return (f"uniform[beta={self.beta}]: violations={self.violations} "
                f"max_defect={float(np.max(self.max_defect)) if len(self.max_defect) else 0.0:.4g} "
                f"sup_decreasing={self.sup_decreasing}")


def uniform_convergence_check(f: RadialProfile, spec: SequenceSpec, beta: float,
                              variant: str = "noncentered", step: float | None = None,
                              eval_top: float | None = None) -> UniformReport:
    """|M f_j - M f| <= ||f_j - f||_{d/beta} + tol at every grid point, for d-1 < beta < d."""
    d = f.d
    if not d - 1 < beta < d:
        raise ValueError(f"needs {d - 1} < beta < {d}")
    step = step or f.h
    eval_top = eval_top or f.t_max
    ts = np.arange(int(round(eval_top / step)) + 1) * step
    seq, _ = make_sequence(f, spec)
    base = maximal_profile(f, beta, variant, ts, step).values
    p = d / beta
    lp, defect, sup = [], [], []
    bad = 0
    for fj in seq:
        vals = maximal_profile(fj, beta, variant, ts, step).values
        dist = lp_norm(fj - f, p)
        diff = np.abs(vals - base)
        tol = 1e-6 + 1e-2 * dist
        bad += int(np.sum(diff > dist + tol))
        lp.append(dist)
        defect.append(float(np.max(diff - dist)))
        sup.append(float(np.max(diff)))
    return UniformReport(beta, np.array(lp), np.array(defect), np.array(sup), bad)


@dataclass(frozen=True)
class ModulusReport:
    w11_dist: np.ndarray
    modulus_dist: np.ndarray
    converges: bool


def modulus_convergence_check(f: RadialProfile, spec: SequenceSpec) -> ModulusReport:
    """|| |f_j| - |f| ||_{W11} shrinks with || f_j - f ||_{W11} (within a 2x noise band)."""
    seq, dists = make_sequence(f, spec)
    absf = modulus(f)
    m = np.array([w11_distance(modulus(fj), absf) for fj in seq])
    if len(m) <= 1:
        return ModulusReport(dists, m, True)
    band = bool(np.all(m[1:] <= 2 * m[:-1] + 1e-15))
    shrink = bool(m[-1] <= 0.25 * m[0] + 1e-15)
    return ModulusReport(dists, m, band and shrink)


def interpolation_constant(f: RadialProfile, spec: SequenceSpec, p: float) -> float:
    """Measured C_S in ||h||_p <= ||h||_1^(1-theta) (C_S ||grad h||_1)^theta for h = f_j - f.

    theta solves 1/p = (1 - theta) + theta (d-1)/d; only meaningful for d >= 2
    and 1 < p < d/(d-1).
    """
    d = f.d
    if d < 2 or not 1 < p < d / (d - 1):
        raise ValueError("needs d >= 2 and 1 < p < d/(d-1)")
    theta = d * (1 - 1 / p)
    seq, _ = make_sequence(f, spec)
    worst = 0.0
    for fj in seq:
        h = fj - f
        g1 = grad_l1(h)
        if g1 == 0:
            continue
        c = (lp_norm(h, p) / lp_norm(h, 1.0) ** (1 - theta)) ** (1 / theta) / g1
        worst = max(worst, c)
    return worst


# -- one-dimensional probe ---------------------------------------------------------

def refine_line(f: LineFunction) -> LineFunction:
    v = f.values
    out = np.empty(2 * len(v) - 1)
    out[0::2] = v
    out[1::2] = 0.5 * (v[:-1] + v[1:])
    return LineFunction(f.x_min, f.h / 2, out)


def _probe_ratio(f: LineFunction, beta: float) -> float:
    q = 1 / (1 - beta)
    res = maximal_1d(f, beta, centered=True)
    g = np.gradient(res.values, res.eval_grid)
    lq = float(np.trapezoid(np.abs(g) ** q, res.eval_grid)) ** (1 / q)
    return lq / f.grad_l1()


@dataclass(frozen=True)
class ProbeReport:
    """Conjecture probe: measured ratios, never a pass/fail statement."""

    beta: float
    ratios: np.ndarray
    ratios_refined: np.ndarray
    label: str = "CONJECTURE PROBE (not a theorem check)"

    @property
    def drift(self) -> np.ndarray:
        return np.abs(self.ratios_refined - self.ratios) / self.ratios

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios))

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.ratios))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["function_id", "ratio", "ratio_refined", "drift"])
        for i, (a, b, c) in enumerate(zip(self.ratios, self.ratios_refined, self.drift)):
            w.writerow([i, repr(float(a)), repr(float(b)), repr(float(c))])
        return buf.getvalue()

    def summary(self) -> str:
        return (f"{self.label}: beta={self.beta} max_ratio={self.max_ratio:.5g} "
                f"(function {self.argmax}) max_drift={float(np.max(self.drift)):.3g}")


def conjecture_probe_1d(corpus, beta: float, refine_check: bool = True) -> ProbeReport:
    """||(M^c_beta f)'||_{L^q} / ||f'||_{L^1} for each line function, q = 1/(1-beta)."""
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty corpus")
    if not 0 < beta < 1:
        raise ValueError("needs 0 < beta < 1")
    ratios = np.array([_probe_ratio(f, beta) for f in corpus])
    if refine_check:
        refined = np.array([_probe_ratio(refine_line(f), beta) for f in corpus])
    else:
        refined = ratios.copy()
    return ProbeReport(beta, ratios, refined)
