"""Scripted human visits replayed against the three safeguarding methods.

Each frame period the runner synthesizes the detector tensor for the
scripted person position, runs the method's supervisor, applies the command
to the simulated robot and integrates the robot exactly up to the next frame.
The run ends when the robot finishes ``total_cycles`` cycles.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import time
from dataclasses import dataclass, field
from os import PathLike
from typing import Sequence

import numpy as np

from .config import RunConfig
from .postproc import PersonDetection
from .robot import RobotState, VelocitySample, advance, apply_command, collision_check, time_to_progress
from .supervisor import CommandOutput, Supervisor
from .tensor_io import GroundTruthPerson, synthesize_tensor
from .zones import Command, ZoneLabel, ZoneLayout, classify_detection


class ScenarioError(ValueError):
    pass


class ScenarioTimeout(RuntimeError):
    pass


class MethodKind(enum.Enum):
    IMMEDIATE_STOP = "immediate-stop"
    ZONE_BASED = "zone-based"
    ZONE_BASED_SQP = "zone-based-sqp"

    @property
    def label(self) -> str:
        return {
            MethodKind.IMMEDIATE_STOP: "Immediate Stop",
            MethodKind.ZONE_BASED: "Zone-based",
            MethodKind.ZONE_BASED_SQP: "Zone-based + SQP",
        }[self]


@dataclass(frozen=True)
class HumanEvent:
    t_start: float
    t_end: float  # math.inf for "until the end of the run"
    center_x: float | None  # None: out of view


@dataclass(frozen=True)
class ScenarioScript:
    """Piecewise-constant single-person presence.

    Event times are seconds after the robot completes ``anchor_cycle`` cycles
    (0 anchors them to the start of the run).
    """

    total_cycles: int
    frame_width: int = 1280
    anchor_cycle: int = 0
    events: tuple[HumanEvent, ...] = ()

    def __post_init__(self):
        if self.total_cycles < 1:
            raise ScenarioError("total_cycles must be at least 1")
        if self.frame_width <= 0:
            raise ScenarioError("frame_width must be positive")
        if not 0 <= self.anchor_cycle <= self.total_cycles:
            raise ScenarioError("anchor_cycle must lie in [0, total_cycles]")
        prev_end = -math.inf
        for e in self.events:
            if not (e.t_start < e.t_end):
                raise ScenarioError(f"event has t_start >= t_end: {e}")
            if e.t_start < prev_end:
                raise ScenarioError("events must be time-sorted and non-overlapping")
            if e.center_x is not None and not (0 <= e.center_x <= self.frame_width):
                raise ScenarioError(f"center_x {e.center_x} outside [0, {self.frame_width}]")
            prev_end = e.t_end

    def person_at(self, t_rel: float) -> float | None:
        for e in self.events:
            if e.t_start <= t_rel < e.t_end:
                return e.center_x
        return None

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioScript":
        try:
            events = tuple(
                HumanEvent(
                    float(e["t_start"]),
                    math.inf if e.get("t_end") is None else float(e["t_end"]),
                    None if e.get("center_x") is None else float(e["center_x"]),
                )
                for e in raw.get("events", [])
            )
            return cls(
                total_cycles=int(raw["total_cycles"]),
                frame_width=int(raw.get("frame_width", 1280)),
                anchor_cycle=int(raw.get("anchor_cycle", 0)),
                events=events,
            )
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"bad scenario field: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "total_cycles": self.total_cycles,
            "frame_width": self.frame_width,
            "anchor_cycle": self.anchor_cycle,
            "events": [
                {
                    "t_start": e.t_start,
                    "t_end": None if math.isinf(e.t_end) else e.t_end,
                    "center_x": e.center_x,
                }
                for e in self.events
            ],
        }


def load_script(path: str | PathLike) -> ScenarioScript:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: expected a JSON object")
    return ScenarioScript.from_dict(raw)


def reference_script(frame_width: int = 1280, attention_x: float = 160.0) -> ScenarioScript:
    """One clear cycle, then 10 s attention, 10 s critical, 10 s attention, then gone."""
    return ScenarioScript(
        total_cycles=6,
        frame_width=frame_width,
        anchor_cycle=1,
        events=(
            HumanEvent(0.0, 10.0, attention_x),
            HumanEvent(10.0, 20.0, frame_width / 2),
            HumanEvent(20.0, 30.0, attention_x),
        ),
    )


@dataclass
class MetricsReport:
    method: MethodKind
    operational_efficiency: float
    latency_mean_ms: float | None
    latency_p99_ms: float | None
    collision_avoidance_rate: float
    total_time: float
    ideal_time: float
    intrusions: int
    collisions: int
    normal_speed: float = 1 / 5.0
    command_timeline: list[CommandOutput] = field(repr=False, default_factory=list)
    velocity_profile: list[VelocitySample] = field(repr=False, default_factory=list)
    ground_truth_zones: list[ZoneLabel] = field(repr=False, default_factory=list)

    def summary(self) -> dict:
        return {
            "method": self.method.value,
            "operational_efficiency": self.operational_efficiency,
            "latency_ms": {"mean": self.latency_mean_ms, "p99": self.latency_p99_ms},
            "collision_avoidance_rate": self.collision_avoidance_rate,
            "total_time": self.total_time,
            "ideal_time": self.ideal_time,
            "intrusions": self.intrusions,
            "collisions": self.collisions,
            "frames": len(self.command_timeline),
            "max_step_ratio": self.max_step_ratio,
        }

    @property
    def max_step_ratio(self) -> float:
        return max_step_ratio(self.velocity_profile, self.normal_speed) if self.velocity_profile else 0.0


def _supervisor_for(method: MethodKind, cfg: RunConfig, clock) -> Supervisor:
    scfg = cfg.supervisor()
    if method is MethodKind.IMMEDIATE_STOP:
        return Supervisor.immediate_stop(scfg, clock=clock)
    return Supervisor(scfg, smoothing=method is MethodKind.ZONE_BASED_SQP, clock=clock)


def _person(center_x: float, cfg: RunConfig) -> GroundTruthPerson:
    return GroundTruthPerson(
        center_x=center_x,
        center_y=cfg.frame_height / 2,
        width=cfg.person_width,
        height=cfg.person_height,
        confidence=cfg.person_confidence,
    )


def ground_truth_zone(center_x: float | None, cfg: RunConfig, layout: ZoneLayout) -> ZoneLabel:
    if center_x is None:
        return ZoneLabel.CLEAR
    x1, y1, x2, y2 = _person(center_x, cfg).corners
    return classify_detection(PersonDetection(x1, y1, x2, y2, cfg.person_confidence), layout)


def run(
    script: ScenarioScript,
    method: MethodKind,
    cfg: RunConfig = RunConfig(),
    seed: int = 0,
    *,
    measure_latency: bool = True,
) -> MetricsReport:
    if script.frame_width != cfg.frame_width:
        cfg = cfg.override(frame_width=script.frame_width)
    rng = np.random.default_rng(seed)
    layout = ZoneLayout(cfg.frame_width)
    sup = _supervisor_for(method, cfg, time.perf_counter if measure_latency else None)
    robot = RobotState(leg_duration=cfg.d_desired_normal)

    goal = 2 * script.total_cycles
    anchor_time = 0.0 if script.anchor_cycle == 0 else None
    timeline: list[CommandOutput] = []
    profile: list[VelocitySample] = []
    gt_zones: list[ZoneLabel] = []
    intrusions = collisions = 0
    intrusion_start: float | None = None
    collided_this_intrusion = False
    finish_time = None

    k = 0
    while finish_time is None:
        t = k * cfg.frame_period
        if t > cfg.max_sim_time:
            raise ScenarioTimeout(
                f"{method.value}: {robot.cycles_completed}/{script.total_cycles} cycles "
                f"after {cfg.max_sim_time} s simulated"
            )

        center_x = None
        entered_at = None
        if anchor_time is not None:
            t_rel = t - anchor_time
            center_x = script.person_at(t_rel)
            if center_x is not None:
                ev = next(e for e in script.events if e.t_start <= t_rel < e.t_end)
                entered_at = anchor_time + ev.t_start
        persons = [] if center_x is None else [_person(center_x, cfg)]
        frame = synthesize_tensor(
            persons, cfg.n_candidates, cfg.frame_width, cfg.frame_height,
            background_logit=cfg.background_logit, rng=rng,
        )

        cmd = sup(frame, t)
        robot = apply_command(robot, cmd)
        timeline.append(cmd)
        profile.append(VelocitySample(t, robot.path_speed, cmd.mode))

        zone = ground_truth_zone(center_x, cfg, layout)
        gt_zones.append(zone)
        if zone is ZoneLabel.CRITICAL:
            if intrusion_start is None:
                # a critical stretch may span several script events
                intrusion_start = entered_at
                intrusions += 1
                collided_this_intrusion = False
            if collision_check(robot, zone, t - intrusion_start, cfg.grace_period):
                if not collided_this_intrusion:
                    collisions += 1
                    collided_this_intrusion = True
        else:
            intrusion_start = None

        dt = cfg.frame_period
        if anchor_time is None:
            to_anchor = time_to_progress(robot, 2 * script.anchor_cycle)
            if to_anchor <= dt:
                anchor_time = t + to_anchor
        to_goal = time_to_progress(robot, goal)
        if to_goal <= dt:
            # nanosecond resolution absorbs float drift from accumulating s
            finish_time = round(t + to_goal, 9)
        robot = advance(robot, dt)
        k += 1

    ideal = script.total_cycles * 2 * cfg.d_desired_normal
    lat = [c.latency_ms for c in timeline if c.latency_ms is not None]
    return MetricsReport(
        method=method,
        operational_efficiency=100.0 * ideal / finish_time,
        latency_mean_ms=float(np.mean(lat)) if lat else None,
        latency_p99_ms=float(np.percentile(lat, 99)) if lat else None,
        collision_avoidance_rate=100.0 if intrusions == 0 else 100.0 * (1 - collisions / intrusions),
        total_time=finish_time,
        ideal_time=ideal,
        intrusions=intrusions,
        collisions=collisions,
        normal_speed=1.0 / cfg.d_desired_normal,
        command_timeline=timeline,
        velocity_profile=profile,
        ground_truth_zones=gt_zones,
    )


def max_step_ratio(profile: Sequence[VelocitySample], normal_speed: float = 1 / 5.0) -> float:
    """Largest speed jump between consecutive moving samples, relative to Normal speed.

    Pairs that involve a Stop sample are skipped: halts are immediate in every
    method, so they say nothing about duration smoothing.
    """
    if not profile:
        raise ValueError("empty velocity profile")
    worst = 0.0
    for a, b in zip(profile, profile[1:]):
        if a.mode is Command.STOP or b.mode is Command.STOP:
            continue
        worst = max(worst, abs(b.speed - a.speed))
    return worst / normal_speed


def compare(
    script: ScenarioScript, cfg: RunConfig = RunConfig(), seed: int = 0, *, measure_latency: bool = True
) -> dict[MethodKind, MetricsReport]:
    return {m: run(script, m, cfg, seed, measure_latency=measure_latency) for m in MethodKind}


def _fmt_latency(r: MetricsReport) -> str:
    return "n/a" if r.latency_mean_ms is None else f"{r.latency_mean_ms:.3f} ms"


def format_table(reports: dict[MethodKind, MetricsReport]) -> str:
    header = ("Method", "OE", "pipeline latency (sim)", "CAR", "total time", "max step")
    rows = [
        (
            m.label,
            f"{r.operational_efficiency:.2f}%",
            _fmt_latency(r),
            f"{r.collision_avoidance_rate:.0f}%",
            f"{r.total_time:.3f} s",
            f"{r.max_step_ratio:.4f}",
        )
        for m, r in reports.items()
    ]
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip() for row in (header, *rows)]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def table_csv(reports: dict[MethodKind, MetricsReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "oe_percent", "latency_mean_ms", "latency_p99_ms", "car_percent",
                "total_time_s", "intrusions", "collisions", "max_step_ratio"])
    for m, r in reports.items():
        w.writerow([
            m.value,
            f"{r.operational_efficiency:.6f}",
            "" if r.latency_mean_ms is None else f"{r.latency_mean_ms:.6f}",
            "" if r.latency_p99_ms is None else f"{r.latency_p99_ms:.6f}",
            f"{r.collision_avoidance_rate:.6f}",
            f"{r.total_time:.6f}",
            r.intrusions,
            r.collisions,
            f"{r.max_step_ratio:.6f}",
        ])
    return buf.getvalue()


def profile_csv(profile: Sequence[VelocitySample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "speed", "mode"])
    for s in profile:
        w.writerow([f"{s.t:.6f}", f"{s.speed:.9f}", s.mode.name])
    return buf.getvalue()


def timeline_csv(timeline: Sequence[CommandOutput]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "mode", "duration", "interrupt", "raw", "detections"])
    for c in timeline:
        w.writerow([
            f"{c.timestamp:.6f}", c.mode.name,
            "" if c.duration is None else f"{c.duration:.9f}",
            int(c.interrupt), c.raw.name, c.n_detections,
        ])
    return buf.getvalue()
