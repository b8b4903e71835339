"""Command line entry point: ``fracmax <experiment> --config run.json``.

Exit codes: 0 all checks passed, 2 invalid input, 3 a check was flagged.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import EXPERIMENTS, ConfigError, RunConfig, config_from_dict, load_config
from .convergence import (SequenceSpec, brezis_lieb_diagnostic, conjecture_probe_1d,
                          run_convergence, tail_smallness, uniform_convergence_check)
from .derivatives import (check_ball_geometry, check_inner_ball, check_kinnunen, check_ks,
                          check_refined_ks, gradient_pair, refine, uv_identities)
from .maximal import maximal_profile
from .oracle2d import compare_with_radial, oracle_maximal_2d, rasterize_radial
from .profiles import make_profile, random_line

EXIT_OK, EXIT_INVALID, EXIT_FLAGGED = 0, 2, 3


@dataclass
class RunOutput:
    files: dict = field(default_factory=dict)
    lines: list = field(default_factory=list)
    flagged: bool = False

    def check(self, ok: bool, line: str) -> None:
        self.lines.append(("ok      " if ok else "FLAGGED ") + line)
        self.flagged |= not ok


def _profile(cfg: RunConfig, refined: bool = False):
    f = make_profile(cfg.function.preset, cfg.function.params, (cfg.d, cfg.grid.h, cfg.grid.t_max),
                     seed=cfg.seed)
    return refine(f) if refined else f


def _eval_grid(cfg: RunConfig, step: float) -> np.ndarray:
    top = cfg.grid.eval_top or cfg.grid.t_max
    return np.arange(int(round(top / step)) + 1) * step


def _step(cfg: RunConfig) -> float:
    return cfg.grid.step or cfg.grid.h


def _sequence(cfg: RunConfig) -> SequenceSpec:
    s = cfg.sequence
    return SequenceSpec(s.kind, s.j_max, s.rate0, s.scale, s.seed)


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([x if isinstance(x, (int, str)) else repr(float(x)) for x in row])
    return buf.getvalue()


def run_maximal(cfg: RunConfig) -> RunOutput:
    out = RunOutput()
    f = _profile(cfg)
    step = _step(cfg)
    res = maximal_profile(f, cfg.beta, cfg.variant, _eval_grid(cfg, step), step)
    out.files["maximal.csv"] = res.to_csv()
    sane = bool(np.all(np.isfinite(res.values)) and np.all(res.values >= 0))
    out.check(sane, f"maximal[{cfg.variant},beta={cfg.beta}]: M f(0)={res.values[0]:.6g} "
                    f"max={res.values.max():.6g} points={len(res.values)}")
    return out


def _pair(cfg, f, step):
    res = maximal_profile(f, cfg.beta, cfg.variant, _eval_grid(cfg, step), step)
    return res, gradient_pair(f, res)


def run_derivative_check(cfg: RunConfig) -> RunOutput:
    out = RunOutput()
    step = _step(cfg)
    res, pair = _pair(cfg, _profile(cfg), step)
    _, pair2 = _pair(cfg, _profile(cfg, refined=True), step / 2)
    err = np.full(len(pair.fd), np.nan)
    err[pair.mask] = pair.relative_errors()
    out.files["luiro.csv"] = _rows_csv(
        ["t", "fd", "luiro", "rel_err", "active"],
        [(t, a, b, e, int(m)) for t, a, b, e, m in
         zip(pair.eval_grid, pair.fd, pair.luiro_closest, err, pair.mask)])
    m1, m2 = pair.median_relative_error(), pair2.median_relative_error()
    tol = cfg.tolerances.luiro_median
    out.check(m1 <= tol, f"luiro: median_rel_err={m1:.4g} (tol {tol}) masked={int(pair.mask.sum())}")
    out.check(m2 < m1, f"luiro: halving grid median_rel_err {m1:.4g} -> {m2:.4g}")
    geo = check_ball_geometry(res, pair, cfg.tolerances.geometry_slack)
    out.check(geo.violations == 0, geo.summary())
    return out


def _drift(a: float, b: float) -> float:
    return abs(b - a) / max(abs(a), 1e-300)


def run_inequalities(cfg: RunConfig) -> RunOutput:
    out = RunOutput()
    f, f2 = _profile(cfg), _profile(cfg, refined=True)
    step = _step(cfg)
    grid = _eval_grid(cfg, step)
    kin = check_kinnunen(f, grid, step)
    out.files["kinnunen.csv"] = kin.to_csv()
    out.check(kin.max <= cfg.tolerances.kinnunen, kin.summary())
    beta = cfg.beta
    if cfg.d >= 2 and 1 <= beta < cfg.d:
        ks = check_ks(f, beta, cfg.variant, grid, step)
        ks2 = check_ks(f2, beta, cfg.variant, _eval_grid(cfg, step / 2), step / 2)
        out.files["ks.csv"] = ks.to_csv()
        dr = _drift(ks.max, ks2.max)
        out.check(np.isfinite(ks.max) and dr <= 0.10,
                  f"{ks.summary()} refined_max={ks2.max:.6g} drift={dr:.3g}")
    res, pair = _pair(cfg, f, step)
    if beta > 0:
        rk = check_refined_ks(f, res, pair)
        res2, pair2 = _pair(cfg, f2, step / 2)
        rk2 = check_refined_ks(f2, res2, pair2)
        out.files["refined_ks.csv"] = rk.to_csv()
        dr = _drift(rk.max, rk2.max)
        out.check(np.isfinite(rk.max) and dr <= 0.10,
                  f"{rk.summary()} refined_max={rk2.max:.6g} drift={dr:.3g}")
    ib = check_inner_ball(f, res)
    out.files["inner_ball.csv"] = ib.to_csv()
    out.check(ib.violations == 0 and ib.extra["weight_bound_ok"] == ib.extra["balls"], ib.summary())
    geo = check_ball_geometry(res, pair, cfg.tolerances.geometry_slack)
    out.check(geo.violations == 0, geo.summary())
    if cfg.d >= 2:
        uv = uv_identities(f)
        out.check(uv.u_error <= 0.01 and uv.v_error <= 0.01, uv.summary())
    return out


def run_converge(cfg: RunConfig) -> RunOutput:
    out = RunOutput()
    f = _profile(cfg)
    step = _step(cfg)
    rep = run_convergence(f, _sequence(cfg), cfg.beta, cfg.variant, cfg.grid.eval_top, step,
                          n_samples=32, sample_seed=cfg.seed or 0,
                          final_fraction=cfg.tolerances.convergence_final)
    out.files["convergence.csv"] = rep.to_csv()
    out.files["convergence_long.csv"] = rep.to_long_csv()
    out.check(rep.converges, rep.summary())
    bl = brezis_lieb_diagnostic(rep)
    out.check(bl.consistent, bl.summary())
    return out


def run_tail(cfg: RunConfig) -> RunOutput:
    out = RunOutput()
    f = _profile(cfg)
    rep = tail_smallness(f, _sequence(cfg), cfg.beta, cfg.tail.k_radii, cfg.tail.eps_fraction,
                         cfg.variant, _step(cfg))
    rows = []
    for j in range(rep.tail_mass.shape[0]):
        for k, rad in enumerate(rep.radii):
            rows.append((j + 1, rad, rep.tail_mass[j, k], rep.reference_tail[k]))
    out.files["tail.csv"] = _rows_csv(["j", "K", "tail_mass", "reference_tail"], rows)
    out.check(rep.monotone_in_k and rep.uniformly_small, rep.summary())
    return out


def run_uniform(cfg: RunConfig) -> RunOutput:
    out = RunOutput()
    f = _profile(cfg)
    rep = uniform_convergence_check(f, _sequence(cfg), cfg.beta, cfg.variant, _step(cfg),
                                    cfg.grid.eval_top)
    out.files["uniform.csv"] = _rows_csv(
        ["j", "lp_dist", "sup_dist", "max_defect"],
        [(j + 1, a, b, c) for j, (a, b, c) in enumerate(zip(rep.lp_dist, rep.sup_dist, rep.max_defect))])
    out.check(rep.violations == 0, rep.summary())
    return out


def run_probe(cfg: RunConfig) -> RunOutput:
    out = RunOutput()
    p = cfg.probe
    corpus = [random_line(cfg.seed + i, p.h, p.n_knots, p.width, p.pad) for i in range(p.n_functions)]
    rep = conjecture_probe_1d(corpus, cfg.beta)
    out.files["probe.csv"] = rep.to_csv()
    # a probe reports numbers; only a numerically unstable measurement is flagged
    drift = float(np.max(rep.drift))
    out.check(np.isfinite(rep.max_ratio) and drift <= cfg.tolerances.probe_drift, rep.summary())
    return out


def run_oracle(cfg: RunConfig) -> RunOutput:
    out = RunOutput()
    f = _profile(cfg)
    o = cfg.oracle
    grid = rasterize_radial(f, o.L, o.h2)
    orc = oracle_maximal_2d(grid, cfg.beta, o.center_stride)
    step = _step(cfg)
    res = maximal_profile(f, cfg.beta, "noncentered", _eval_grid(cfg, step), step)
    gap = compare_with_radial(orc, res)
    out.files["oracle.csv"] = orc.grid.to_csv()
    out.files["oracle_gap.csv"] = _rows_csv(["t", "oracle", "radial", "rel_gap"],
                                            zip(gap.t, gap.oracle, gap.radial, gap.rel_gap))
    out.check(gap.max_gap <= cfg.tolerances.oracle_gap, gap.summary())
    return out


RUNNERS = {
    "maximal": run_maximal,
    "derivative-check": run_derivative_check,
    "inequalities": run_inequalities,
    "converge": run_converge,
    "tail": run_tail,
    "uniform": run_uniform,
    "probe-1d": run_probe,
    "oracle-compare": run_oracle,
}


def write_artifacts(cfg: RunConfig, out: RunOutput, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["# resolved config", cfg.to_json(), "# outputs (sha256)"]
    for name in sorted(out.files):
        data = out.files[name].encode()
        (out_dir / name).write_bytes(data)
        lines.append(f"{hashlib.sha256(data).hexdigest()}  {name}")
    lines.append("# verdicts")
    lines.extend(out.lines)
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def run_config(cfg: RunConfig, out_dir=None) -> tuple[int, RunOutput]:
    out = RUNNERS[cfg.experiment](cfg)
    write_artifacts(cfg, out, Path(out_dir or cfg.output))
    return (EXIT_FLAGGED if out.flagged else EXIT_OK), out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracmax", description=__doc__.splitlines()[0])
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--threads", type=int, help="numba worker threads")
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                    help="set a config entry, e.g. grid.h=0.02 (repeatable)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = [f"experiment={args.experiment}"] + list(args.override)
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            cfg = config_from_dict({}, overrides)
        if args.out:
            cfg.output = args.out
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be >= 1")
            import numba
            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        code, out = run_config(cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for line in out.lines:
        print(line)
    return code


if __name__ == "__main__":
    sys.exit(main())
