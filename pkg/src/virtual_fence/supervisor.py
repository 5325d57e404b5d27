"""Per-frame control loop: decode, zone, buffer, solve, publish.

The supervisor is a pure state machine. ``step`` takes the previous state and
one frame and returns the next state plus the command to publish; the caller
owns the state and must sequence calls.

Escalation (toward Slow or Stop) takes effect on the frame that triggers it.
Relaxation back to Normal waits until ``t_buffer`` seconds have passed since
the last frame that had any detection.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Callable

from .config import SupervisorConfig
from .optimizer import QpParams, solve_sqp
from .postproc import PersonDetection, PostprocConfig, decode
from .tensor_io import DetectionFrameTensor
from .zones import Command, RawZoneCommand, ZoneLayout, anywhere_command, frame_command

# absorbs float error in frame timestamps built as k * period
_TIME_EPS = 1e-9


class TimestampError(ValueError):
    pass


@dataclass(frozen=True)
class SupervisorState:
    mode: Command
    d_prev: float
    last_detection_time: float | None = None
    last_step_time: float | None = None


@dataclass(frozen=True)
class CommandOutput:
    """What the supervisor publishes for one frame.

    ``duration`` is None exactly when the command is a halt.
    """

    mode: Command
    duration: float | None
    interrupt: bool
    timestamp: float
    raw: Command
    n_detections: int
    latency_ms: float | None = None

    @property
    def is_halt(self) -> bool:
        return self.duration is None

    def to_dict(self) -> dict:
        out = {
            "t": self.timestamp,
            "mode": self.mode.name,
            "kind": "halt" if self.is_halt else "duration",
            "duration": self.duration,
            "interrupt": self.interrupt,
            "raw": self.raw.name,
            "detections": self.n_detections,
        }
        if self.latency_ms is not None:
            out["latency_ms"] = self.latency_ms
        return out


def reset(cfg: SupervisorConfig) -> SupervisorState:
    return SupervisorState(mode=Command.NORMAL, d_prev=cfg.d_desired_normal)


def desired_duration(mode: Command, cfg: SupervisorConfig) -> float:
    if mode is Command.NORMAL:
        return cfg.d_desired_normal
    if mode is Command.SLOW:
        return cfg.d_desired_slow
    raise ValueError("Stop has no target duration")


def buffered_mode(state: SupervisorState, raw: Command, now: float, t_buffer: float) -> Command:
    """Hold a restrictive mode while the buffer period has not yet run out."""
    if (
        raw is Command.NORMAL
        and state.mode is not Command.NORMAL
        and state.last_detection_time is not None
        and now - state.last_detection_time < t_buffer - _TIME_EPS
    ):
        return state.mode
    return raw


def step(
    state: SupervisorState,
    frame: DetectionFrameTensor,
    now: float,
    cfg: SupervisorConfig,
    *,
    smoothing: bool = True,
    zone_policy: Callable[[list[PersonDetection], ZoneLayout], RawZoneCommand] = frame_command,
    clock: Callable[[], float] | None = time.perf_counter,
) -> tuple[SupervisorState, CommandOutput]:
    """Advance the supervisor by one frame.

    With ``smoothing=False`` the duration jumps straight to the mode's target
    instead of going through the QP. ``zone_policy`` maps detections to the raw
    command; pass :func:`anywhere_command` for the immediate-stop baseline.
    ``clock=None`` disables latency measurement.
    """
    if state.last_step_time is not None and now < state.last_step_time:
        raise TimestampError(f"timestamp went backwards: {now} < {state.last_step_time}")
    t0 = clock() if clock is not None else None

    detections = decode(frame, PostprocConfig(tau=cfg.tau, nms_iou=cfg.nms_iou))
    raw = zone_policy(detections, ZoneLayout(frame.frame_width))
    last_seen = now if detections else state.last_detection_time
    mode = buffered_mode(replace(state, last_detection_time=last_seen), raw.command, now, cfg.t_buffer)
    interrupt = mode is not state.mode

    if mode is Command.STOP:
        duration = None
        d_prev = state.d_prev
    elif smoothing:
        p = QpParams(cfg.alpha, cfg.beta, desired_duration(mode, cfg), state.d_prev, cfg.d_min, cfg.d_max)
        duration = solve_sqp(p).d_star
        d_prev = duration
    else:
        duration = desired_duration(mode, cfg)
        d_prev = duration

    latency = (clock() - t0) * 1e3 if clock is not None else None
    new_state = SupervisorState(mode=mode, d_prev=d_prev, last_detection_time=last_seen, last_step_time=now)
    out = CommandOutput(
        mode=mode,
        duration=duration,
        interrupt=interrupt,
        timestamp=now,
        raw=raw.command,
        n_detections=len(detections),
        latency_ms=latency,
    )
    return new_state, out


class Supervisor:
    """Stateful wrapper around :func:`step` for a single owner."""

    def __init__(self, cfg: SupervisorConfig = SupervisorConfig(), *, smoothing: bool = True,
                 zone_policy=frame_command, clock=time.perf_counter):
        self.cfg = cfg
        self.smoothing = smoothing
        self.zone_policy = zone_policy
        self.clock = clock
        self.state = reset(cfg)

    @classmethod
    def immediate_stop(cls, cfg: SupervisorConfig = SupervisorConfig(), **kw) -> "Supervisor":
        return cls(cfg, smoothing=False, zone_policy=anywhere_command, **kw)

    def reset(self) -> None:
        self.state = reset(self.cfg)

    def __call__(self, frame: DetectionFrameTensor, now: float) -> CommandOutput:
        self.state, out = step(
            self.state, frame, now, self.cfg,
            smoothing=self.smoothing, zone_policy=self.zone_policy, clock=self.clock,
        )
        return out
