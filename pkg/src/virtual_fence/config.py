"""Run configuration with the experiment's constants as defaults.

Config files are JSON objects whose keys are field names of
:class:`RunConfig`. Precedence: built-in defaults < config file < CLI flags.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from os import PathLike


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SupervisorConfig:
    tau: float = 0.65
    t_buffer: float = 3.0
    alpha: float = 1.0
    beta: float = 0.85
    d_min: float = 4.0
    d_max: float = 11.0
    d_desired_normal: float = 5.0
    d_desired_slow: float = 10.0
    nms_iou: float | None = 0.45

    def __post_init__(self):
        _check(0 < self.tau < 1, "tau", "must lie in (0, 1)")
        _check(self.t_buffer > 0, "t_buffer", "must be positive")
        _check(self.alpha > 0, "alpha", "must be positive")
        _check(self.beta > 0, "beta", "must be positive")
        _check(self.d_min < self.d_max, "d_min", "must be below d_max")
        for name in ("d_desired_normal", "d_desired_slow"):
            v = getattr(self, name)
            _check(self.d_min <= v <= self.d_max, name, f"must lie in [{self.d_min}, {self.d_max}]")
        if self.nms_iou is not None:
            _check(0 < self.nms_iou <= 1, "nms_iou", "must lie in (0, 1] or be null")


@dataclass(frozen=True)
class RunConfig(SupervisorConfig):
    frame_width: int = 1280
    frame_height: int = 720
    frame_period: float = 0.033
    latency_budget: float | None = None  # None: two frame periods
    n_candidates: int = 64
    person_width: float = 120.0
    person_height: float = 400.0
    person_confidence: float = 0.9
    background_logit: float = -10.0
    max_sim_time: float = 3600.0
    output_dir: str | None = None

    def __post_init__(self):
        super().__post_init__()
        _check(self.frame_width > 0 and self.frame_height > 0, "frame_width", "must be positive")
        _check(self.frame_period > 0, "frame_period", "must be positive")
        if self.latency_budget is not None:
            _check(self.latency_budget >= 0, "latency_budget", "must be non-negative")
        _check(self.n_candidates >= 1, "n_candidates", "must be at least 1")
        _check(self.person_width > 0 and self.person_height > 0, "person_width", "must be positive")
        _check(self.person_confidence > self.tau, "person_confidence", "must exceed tau")
        _check(self.person_confidence < 1, "person_confidence", "must be below 1")
        _check(self.max_sim_time > 0, "max_sim_time", "must be positive")

    @property
    def grace_period(self) -> float:
        if self.latency_budget is None:
            return 2 * self.frame_period
        return self.latency_budget

    def supervisor(self) -> SupervisorConfig:
        names = {f.name for f in fields(SupervisorConfig)}
        return SupervisorConfig(**{k: v for k, v in asdict(self).items() if k in names})

    def override(self, **changes) -> "RunConfig":
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        try:
            return replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def _check(ok: bool, name: str, msg: str) -> None:
    if not ok:
        raise ConfigError(f"{name} {msg}")


def load_config(path: str | PathLike, base: RunConfig | None = None) -> RunConfig:
    base = base or RunConfig()
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    types = {f.name: f.type for f in fields(RunConfig)}
    for key, value in raw.items():
        if key not in types:
            raise ConfigError(f"{path}: unknown config field {key!r}")
        if key == "output_dir":
            if value is not None and not isinstance(value, str):
                raise ConfigError(f"{path}: output_dir must be a string")
        elif key in ("nms_iou", "latency_budget") and value is None:
            pass
        elif isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{path}: {key} must be a finite number")
    return base.override(**raw)
