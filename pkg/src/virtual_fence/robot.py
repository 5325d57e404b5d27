"""Kinematic model of the A -> B -> A pick cycle.

Position along the current leg is a path parameter ``s`` in [0, 1]. A
duration command ``d`` means one full leg takes ``d`` seconds, so the
remaining ``1 - s`` of a leg is re-timed to ``d * (1 - s)`` from the moment
the command arrives. A halt freezes ``s``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .supervisor import CommandOutput
from .zones import Command, ZoneLabel


class Leg(enum.Enum):
    A_TO_B = "AtoB"
    B_TO_A = "BtoA"


@dataclass(frozen=True)
class RobotState:
    s: float = 0.0
    leg: Leg = Leg.A_TO_B
    cycles_completed: int = 0
    leg_duration: float | None = None  # None = halted

    @property
    def path_speed(self) -> float:
        return 0.0 if self.leg_duration is None else 1.0 / self.leg_duration

    @property
    def halted(self) -> bool:
        return self.leg_duration is None

    @property
    def progress(self) -> float:
        """Legs completed so far, including the fraction of the current one."""
        legs = 2 * self.cycles_completed + (1 if self.leg is Leg.B_TO_A else 0)
        return legs + self.s


@dataclass(frozen=True)
class VelocitySample:
    t: float
    speed: float
    mode: Command


def apply_command(state: RobotState, cmd: CommandOutput) -> RobotState:
    if cmd.is_halt:
        return replace(state, leg_duration=None)
    return replace(state, leg_duration=cmd.duration)


def advance(state: RobotState, dt: float) -> RobotState:
    """Move along the path for ``dt`` seconds at the current speed.

    Reaching the end of a leg flips to the other leg with ``s = 0`` and
    carries the leftover time over at the same speed. Finishing a B -> A leg
    completes a cycle.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if state.halted or dt == 0:
        return state
    s, leg, cycles = state.s, state.leg, state.cycles_completed
    s += dt / state.leg_duration
    while s >= 1.0:
        s -= 1.0
        if leg is Leg.B_TO_A:
            cycles += 1
            leg = Leg.A_TO_B
        else:
            leg = Leg.B_TO_A
    return replace(state, s=s, leg=leg, cycles_completed=cycles)


def time_to_progress(state: RobotState, target: float) -> float:
    """Seconds until ``state.progress`` reaches ``target`` at the current speed."""
    remaining = target - state.progress
    if remaining <= 0:
        return 0.0
    if state.halted:
        return math.inf
    return remaining * state.leg_duration


def collision_check(state: RobotState, person_zone: ZoneLabel, time_in_critical: float,
                    latency_budget: float) -> bool:
    """A collision is a moving robot with a person in the critical zone past the grace window."""
    return (
        person_zone is ZoneLabel.CRITICAL
        and state.path_speed > 0
        and time_in_critical > latency_budget
    )
