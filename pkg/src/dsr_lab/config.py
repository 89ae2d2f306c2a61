"""Sweep configuration: parsing, validation and round-tripping.

Configs are YAML (JSON also parses) with nested sections. Unknown keys are
rejected so that a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .benchmarks import KINDS
from .channels import DEFAULT_QUAD_ORDER
from .errors import ConfigError
from .fock import DEFAULT_TAIL_TOL

SCENARIOS = ("ideal", "pnr", "phase_diffusion", "thermal", "benchmarks")


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    count: int
    spacing: str = "linear"

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class Detector:
    M: int = 1
    eta: float = 1.0
    nu: float = 0.0


@dataclass(frozen=True)
class Noise:
    sigma: float | None = None
    n_t: float | None = None
    combined: bool = False


@dataclass(frozen=True)
class Priors:
    p0: float = 0.5
    p1: float = 0.5


@dataclass(frozen=True)
class Numerics:
    tail_tol: float = DEFAULT_TAIL_TOL
    quad_order: int = DEFAULT_QUAD_ORDER


@dataclass(frozen=True)
class Outputs:
    csv_path: str | None = None
    json_path: str | None = None
    ratio_benchmarks: tuple = ()


@dataclass(frozen=True)
class SweepConfig:
    scenario: str
    grid: Grid
    detector: Detector = field(default_factory=Detector)
    noise: Noise = field(default_factory=Noise)
    priors: Priors = field(default_factory=Priors)
    numerics: Numerics = field(default_factory=Numerics)
    outputs: Outputs = field(default_factory=Outputs)
    beta: float | None = None
    name: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["outputs"]["ratio_benchmarks"] = list(self.outputs.ratio_benchmarks)
        return d


_SECTIONS = {
    "grid": Grid,
    "detector": Detector,
    "noise": Noise,
    "priors": Priors,
    "numerics": Numerics,
    "outputs": Outputs,
}
_TOP = {"scenario", "beta", "name", *_SECTIONS}


def _section(cls, raw, path):
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a mapping")
    known = cls.__dataclass_fields__
    for key in raw:
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown key")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(path, str(exc)) from None


def _number(value, path, *, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return int(value) if integer else float(value)


def parse_config(raw: dict, require_noise: bool = True) -> SweepConfig:
    """Validate ``raw``; ``require_noise=False`` lets noisy scenarios omit their noise level."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a mapping")
    for key in raw:
        if key not in _TOP:
            raise ConfigError(key, "unknown key")
    scenario = raw.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError("scenario", f"expected one of {', '.join(SCENARIOS)}, got {scenario!r}")
    if "grid" not in raw:
        raise ConfigError("grid", "missing section")
    parts = {name: _section(cls, raw.get(name, {}), name) for name, cls in _SECTIONS.items()}

    g = parts["grid"]
    grid = Grid(_number(g.start, "grid.start"), _number(g.stop, "grid.stop"),
                _number(g.count, "grid.count", integer=True), g.spacing)
    if grid.count < 2:
        raise ConfigError("grid.count", "must be >= 2")
    if not grid.start < grid.stop:
        raise ConfigError("grid.start", "must be below grid.stop")
    if grid.start < 0:
        raise ConfigError("grid.start", "must be >= 0")
    if grid.spacing not in ("linear", "log"):
        raise ConfigError("grid.spacing", "expected 'linear' or 'log'")
    if grid.spacing == "log" and grid.start <= 0:
        raise ConfigError("grid.start", "log spacing needs start > 0")

    d = parts["detector"]
    det = Detector(_number(d.M, "detector.M", integer=True), _number(d.eta, "detector.eta"),
                   _number(d.nu, "detector.nu"))
    if det.M < 1:
        raise ConfigError("detector.M", "must be >= 1")
    if not 0 < det.eta <= 1:
        raise ConfigError("detector.eta", "must lie in (0, 1]")
    if det.nu < 0:
        raise ConfigError("detector.nu", "must be >= 0")

    if scenario == "ideal" and (det.eta != 1 or det.nu != 0):
        raise ConfigError("detector", "the ideal scenario needs eta = 1 and nu = 0")

    n = parts["noise"]
    noise = Noise(_number(n.sigma, "noise.sigma", allow_none=True),
                  _number(n.n_t, "noise.n_t", allow_none=True), n.combined)
    if not isinstance(noise.combined, bool):
        raise ConfigError("noise.combined", "expected true or false")
    if noise.sigma is not None and noise.sigma < 0:
        raise ConfigError("noise.sigma", "must be >= 0")
    if noise.n_t is not None and noise.n_t < 0:
        raise ConfigError("noise.n_t", "must be >= 0")
    if require_noise and scenario == "phase_diffusion" and noise.sigma is None:
        raise ConfigError("noise.sigma", "required by the phase_diffusion scenario")
    if require_noise and scenario == "thermal" and noise.n_t is None:
        raise ConfigError("noise.n_t", "required by the thermal scenario")
    if noise.sigma is not None and noise.n_t is not None and not noise.combined:
        raise ConfigError("noise", "both sigma and n_t given; set combined: true to compose them")
    if noise.combined and scenario not in ("phase_diffusion", "thermal"):
        raise ConfigError("noise.combined", "only meaningful for noisy scenarios")

    p = parts["priors"]
    priors = Priors(_number(p.p0, "priors.p0"), _number(p.p1, "priors.p1"))
    if priors.p0 < 0 or priors.p1 < 0 or abs(priors.p0 + priors.p1 - 1) > 1e-12:
        raise ConfigError("priors", "must be non-negative and sum to 1")

    m = parts["numerics"]
    numerics = Numerics(_number(m.tail_tol, "numerics.tail_tol"),
                        _number(m.quad_order, "numerics.quad_order", integer=True))
    if not 0 < numerics.tail_tol < 1:
        raise ConfigError("numerics.tail_tol", "must lie in (0, 1)")
    if numerics.quad_order < 1 or numerics.quad_order % 2 == 0:
        raise ConfigError("numerics.quad_order", "must be a positive odd integer")

    o = parts["outputs"]
    kinds = o.ratio_benchmarks
    if isinstance(kinds, str) or not isinstance(kinds, (list, tuple)):
        raise ConfigError("outputs.ratio_benchmarks", "expected a list")
    kinds = tuple(str(k).upper() for k in kinds)
    for k in kinds:
        if k not in KINDS:
            raise ConfigError("outputs.ratio_benchmarks", f"unknown benchmark {k!r}")
        if k.endswith("_PD") and noise.sigma is None:
            raise ConfigError("outputs.ratio_benchmarks", f"{k} needs noise.sigma")
    for key in ("csv_path", "json_path"):
        val = getattr(o, key)
        if val is not None and not isinstance(val, str):
            raise ConfigError(f"outputs.{key}", "expected a path string")
    outputs = Outputs(o.csv_path, o.json_path, kinds)

    beta = _number(raw.get("beta"), "beta", allow_none=True)
    if beta is not None and not 0 <= beta <= 1:
        raise ConfigError("beta", "must lie in [0, 1]")
    name = raw.get("name")
    if name is not None and not isinstance(name, str):
        raise ConfigError("name", "expected a string")
    return SweepConfig(scenario, grid, det, noise, priors, numerics, outputs, beta, name)


def load_yaml(path) -> object:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror or exc}") from None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"malformed YAML: {exc}") from None


def load_config(path, require_noise: bool = True) -> SweepConfig:
    return parse_config(load_yaml(path), require_noise)


def dump_config(config: SweepConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)
