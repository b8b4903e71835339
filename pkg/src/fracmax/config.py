"""Run configuration: nested JSON sections mapped onto dataclasses."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .convergence import SEQUENCE_KINDS
from .maximal import KINDS
from .profiles import PRESETS

EXPERIMENTS = ("maximal", "derivative-check", "inequalities", "converge", "tail", "uniform",
               "probe-1d", "oracle-compare")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass
class GridConfig:
    h: float = 0.01
    t_max: float = 2.0
    eval_top: float | None = None  # defaults to t_max
    step: float | None = None  # (s, r) search spacing, defaults to h


@dataclass
class FunctionConfig:
    preset: str = "tent"
    params: dict = field(default_factory=lambda: {"a": 1.0})


@dataclass
class SequenceConfig:
    kind: str = "amplitude"
    j_max: int = 8
    rate0: float = 1.0
    scale: float | None = None
    seed: int = 0


@dataclass
class TailConfig:
    k_radii: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    eps_fraction: float = 0.01


@dataclass
class ProbeConfig:
    n_functions: int = 20
    h: float = 0.01
    n_knots: int = 6
    width: float = 2.0
    pad: float = 3.0


@dataclass
class OracleConfig:
    L: float = 2.0
    h2: float = 0.05
    center_stride: int = 1


@dataclass
class Tolerances:
    luiro_median: float = 0.05
    kinnunen: float = 1.05
    oracle_gap: float = 0.02
    convergence_final: float = 0.05
    probe_drift: float = 0.10
    geometry_slack: float = 2.0


@dataclass
class RunConfig:
    experiment: str = "maximal"
    d: int = 2
    beta: float = 0.5
    variant: str = "noncentered"
    seed: int | None = None
    grid: GridConfig = field(default_factory=GridConfig)
    function: FunctionConfig = field(default_factory=FunctionConfig)
    sequence: SequenceConfig = field(default_factory=SequenceConfig)
    tail: TailConfig = field(default_factory=TailConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: str = "out"

    def validate(self) -> "RunConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown {self.experiment!r}; choose from {EXPERIMENTS}")
        if not isinstance(self.d, int) or self.d < 1:
            raise ConfigError(f"d: must be a positive integer (got {self.d!r})")
        if self.experiment == "probe-1d":
            if not 0 < self.beta < 1:
                raise ConfigError(f"beta: probe-1d needs 0 < beta < 1 (got beta={self.beta})")
        elif not 0 <= self.beta < self.d:
            bound = "beta >= 0" if self.beta < 0 else f"beta < d = {self.d}"
            raise ConfigError(f"beta: violates the bound {bound} (got beta={self.beta}, d={self.d})")
        if self.variant not in KINDS:
            raise ConfigError(f"variant: unknown {self.variant!r}; choose from {KINDS}")
        g = self.grid
        if g.h <= 0 or g.t_max <= 0:
            raise ConfigError("grid.h and grid.t_max must be positive")
        if g.step is not None and g.step <= 0:
            raise ConfigError("grid.step must be positive")
        if g.eval_top is not None and g.eval_top <= 0:
            raise ConfigError("grid.eval_top must be positive")
        if self.function.preset not in PRESETS:
            raise ConfigError(f"function.preset: unknown {self.function.preset!r}; choose from {PRESETS}")
        if not isinstance(self.function.params, dict):
            raise ConfigError("function.params must be an object")
        randomized = self.function.preset == "random_pl" or self.experiment == "probe-1d" or (
            self.experiment in ("converge", "tail", "uniform") and self.sequence.kind == "node_jitter")
        if randomized and self.seed is None:
            raise ConfigError("seed: required for randomized function or sequence specs")
        if self.sequence.kind not in SEQUENCE_KINDS:
            raise ConfigError(f"sequence.kind: unknown {self.sequence.kind!r}; choose from {SEQUENCE_KINDS}")
        if self.sequence.j_max < 0:
            raise ConfigError("sequence.j_max must be >= 0")
        if self.experiment == "uniform" and not self.d - 1 < self.beta < self.d:
            raise ConfigError(f"beta: uniform needs d - 1 < beta < d (got beta={self.beta}, d={self.d})")
        if self.experiment == "oracle-compare" and self.d != 2:
            raise ConfigError(f"d: oracle-compare runs in d = 2 only (got d={self.d})")
        if self.experiment == "tail":
            k = self.tail.k_radii
            if not k or any(b <= a for a, b in zip(k, k[1:])):
                raise ConfigError("tail.k_radii must be a non-empty increasing list")
        if self.oracle.center_stride < 1 or self.oracle.h2 <= 0 or self.oracle.L <= 0:
            raise ConfigError("oracle: need L > 0, h2 > 0 and center_stride >= 1")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    names = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"{path + '.' if path else ''}{key}: unknown key")
        sub = _SECTIONS.get((cls, key))
        kwargs[key] = _build(sub, value, f"{path + '.' if path else ''}{key}") if sub else value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


_SECTIONS = {
    (RunConfig, "grid"): GridConfig,
    (RunConfig, "function"): FunctionConfig,
    (RunConfig, "sequence"): SequenceConfig,
    (RunConfig, "tail"): TailConfig,
    (RunConfig, "probe"): ProbeConfig,
    (RunConfig, "oracle"): OracleConfig,
    (RunConfig, "tolerances"): Tolerances,
}


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key.sub=value`` strings; values are parsed as JSON when possible."""
    data = json.loads(json.dumps(data))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key}: {part} is not a section")
        node[parts[-1]] = _parse_value(raw)
    return data


def config_from_dict(data: dict, overrides=()) -> RunConfig:
    return _build(RunConfig, apply_overrides(data, overrides), "").validate()


def load_config(path, overrides=()) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return config_from_dict(data, overrides)
