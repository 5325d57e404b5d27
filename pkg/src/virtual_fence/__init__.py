"""Zone-based virtual fencing for collaborative robots.

Person detections are decoded from raw detector tensors, mapped onto a
three-zone split of the camera frame, and turned into leg-duration commands
that a small box-constrained QP smooths between frames.
"""

from .config import RunConfig, SupervisorConfig
from .optimizer import DurationSolution, QpParams, closed_form, solve_sqp
from .postproc import PersonDetection, PostprocConfig, decode
from .scenario import MethodKind, ScenarioScript, compare, reference_script, run
from .supervisor import CommandOutput, Supervisor, SupervisorState, reset, step
from .tensor_io import DetectionFrameTensor, GroundTruthPerson, read_tensor, synthesize_tensor, write_tensor
from .zones import Command, ZoneLabel, ZoneLayout, classify_detection, frame_command

__all__ = [
    "Command",
    "CommandOutput",
    "DetectionFrameTensor",
    "DurationSolution",
    "GroundTruthPerson",
    "MethodKind",
    "PersonDetection",
    "PostprocConfig",
    "QpParams",
    "RunConfig",
    "ScenarioScript",
    "Supervisor",
    "SupervisorConfig",
    "SupervisorState",
    "ZoneLabel",
    "ZoneLayout",
    "classify_detection",
    "closed_form",
    "compare",
    "decode",
    "frame_command",
    "reference_script",
    "read_tensor",
    "reset",
    "run",
    "solve_sqp",
    "step",
    "synthesize_tensor",
    "write_tensor",
]
