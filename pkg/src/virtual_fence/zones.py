"""Safety zones over the camera frame and the per-frame raw command.

The frame is split vertically: the central critical interval
``[W/4, 3W/4]`` and the two side attention intervals. A detection is
classified by its horizontal extent with the most restrictive overlap
winning, so a box that touches the critical interval at all is Critical.

The same rule is also written in constraint-function form: a safety rule is
a list of functions ``b(x, q) -> float`` and a state is safe under the rule
when every function is non-negative; the overall safe set is the
intersection over all rules.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .postproc import PersonDetection


class ZoneLabel(enum.IntEnum):
    CLEAR = 0
    ATTENTION = 1
    CRITICAL = 2


class Command(enum.IntEnum):
    NORMAL = 0
    SLOW = 1
    STOP = 2


_COMMAND_FOR_ZONE = {
    ZoneLabel.CLEAR: Command.NORMAL,
    ZoneLabel.ATTENTION: Command.SLOW,
    ZoneLabel.CRITICAL: Command.STOP,
}


@dataclass(frozen=True)
class ZoneLayout:
    frame_width: float

    def __post_init__(self):
        if not self.frame_width > 0:
            raise ValueError("frame_width must be positive")

    @property
    def critical_lo(self) -> float:
        return self.frame_width / 4

    @property
    def critical_hi(self) -> float:
        return 3 * self.frame_width / 4

    @property
    def center(self) -> float:
        return self.frame_width / 2


@dataclass(frozen=True)
class RawZoneCommand:
    command: Command
    source_zone: ZoneLabel
    detection: PersonDetection | None = None


Constraint = Callable[[object, float], float]


@dataclass
class SafetyRule:
    """One rule: state ``x`` is safe iff ``b(x, q) >= 0`` for every constraint."""

    id: int
    constraints: list[Constraint] = field(default_factory=list)

    def values(self, x, q) -> list[float]:
        return [b(x, q) for b in self.constraints]

    def holds(self, x, q) -> bool:
        return all(v >= 0 for v in self.values(x, q))


def in_safe_set(rules: Iterable[SafetyRule], x, q_by_rule: dict[int, float]) -> bool:
    """Membership in the intersection of every rule's safe subset."""
    return all(rule.holds(x, q_by_rule[rule.id]) for rule in rules)


def _intersects(lo: float, hi: float, a: float, b: float) -> bool:
    # closed intervals
    return lo <= b and a <= hi


def classify_detection(d: PersonDetection, layout: ZoneLayout) -> ZoneLabel:
    if _intersects(d.x1, d.x2, layout.critical_lo, layout.critical_hi):
        return ZoneLabel.CRITICAL
    if _intersects(d.x1, d.x2, 0.0, layout.frame_width):
        return ZoneLabel.ATTENTION
    return ZoneLabel.CLEAR


def evaluate_safety_membership(person_center_x: float, layout: ZoneLayout) -> tuple[float, float]:
    """Distance to the critical-zone center and the camera-rule constraint value.

    Returns ``(q, b)`` with ``q = |x - W/2|`` and ``b = q - W/4``; ``b >= 0``
    means the center point lies outside the open critical interval.
    """
    q = abs(person_center_x - layout.center)
    return q, q - layout.frame_width / 4


def camera_rule(layout: ZoneLayout, rule_id: int = 0) -> SafetyRule:
    """The single camera-zone rule as a :class:`SafetyRule` over ``q``."""
    return SafetyRule(id=rule_id, constraints=[lambda _x, q: q - layout.frame_width / 4])


def frame_command(detections: Sequence[PersonDetection], layout: ZoneLayout) -> RawZoneCommand:
    worst_zone = ZoneLabel.CLEAR
    worst: PersonDetection | None = None
    for d in detections:
        zone = classify_detection(d, layout)
        if zone > worst_zone:
            worst_zone, worst = zone, d
    return RawZoneCommand(_COMMAND_FOR_ZONE[worst_zone], worst_zone, worst)


def anywhere_command(detections: Sequence[PersonDetection], layout: ZoneLayout) -> RawZoneCommand:
    """Immediate-stop baseline: any detection inside the frame means Stop."""
    for d in detections:
        if classify_detection(d, layout) is not ZoneLabel.CLEAR:
            return RawZoneCommand(Command.STOP, classify_detection(d, layout), d)
    return RawZoneCommand(Command.NORMAL, ZoneLabel.CLEAR, None)
