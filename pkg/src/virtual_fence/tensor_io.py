"""Raw detection tensors: the VFT1 file format and synthetic tensor generation.

A detection tensor has the layout ``(1, 84, N)``: rows 0-3 hold the
center-format box ``(cx, cy, w, h)`` of each candidate column, rows 4-83 hold
the 80 class logits. Class 0 is "person".

VFT1 layout (little-endian)::

    b"VFT1" | u32 84 | u32 N | u32 frame_width | u32 frame_height | 84*N f32

The payload is row-major with rows = attributes and columns = candidates.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from os import PathLike
from typing import Sequence

import numpy as np

N_ATTRIBUTES = 84
N_BOX = 4
N_CLASSES = 80
PERSON_CLASS = 0

MAGIC = b"VFT1"
_HEADER = struct.Struct("<4s4I")


class TensorFormatError(ValueError):
    """Base class for VFT1 parse failures."""


class MalformedHeaderError(TensorFormatError):
    pass


class TruncatedPayloadError(TensorFormatError):
    pass


class TrailingDataError(TensorFormatError):
    pass


class NonFiniteValueError(TensorFormatError):
    pass


@dataclass(frozen=True, eq=False)
class DetectionFrameTensor:
    data: np.ndarray
    frame_width: int
    frame_height: int

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or data.shape[0] != 1 or data.shape[1] != N_ATTRIBUTES:
            raise ValueError(f"tensor data must have shape (1, 84, N), got {data.shape}")
        if data.shape[2] < 1:
            raise ValueError("tensor must hold at least one candidate")
        if not np.all(np.isfinite(data)):
            raise ValueError("tensor data contains non-finite values")
        if self.frame_width <= 0 or self.frame_height <= 0:
            raise ValueError("frame dimensions must be positive")
        object.__setattr__(self, "data", data)

    @property
    def n_candidates(self) -> int:
        return self.data.shape[2]

    @property
    def boxes(self) -> np.ndarray:
        """Center-format boxes, shape (N, 4)."""
        return self.data[0, :N_BOX, :].T

    @property
    def logits(self) -> np.ndarray:
        """Class logits, shape (N, 80)."""
        return self.data[0, N_BOX:, :].T

    def __eq__(self, other):
        if not isinstance(other, DetectionFrameTensor):
            return NotImplemented
        return (
            self.frame_width == other.frame_width
            and self.frame_height == other.frame_height
            and self.data.shape == other.data.shape
            and self.data.tobytes() == other.data.astype(self.data.dtype).tobytes()
        )


@dataclass(frozen=True)
class GroundTruthPerson:
    center_x: float
    center_y: float
    width: float
    height: float
    confidence: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("person box must have positive width and height")
        if not (0.0 < self.confidence < 1.0):
            raise ValueError(f"confidence must lie in (0, 1), got {self.confidence}")

    @property
    def corners(self) -> tuple[float, float, float, float]:
        hw, hh = self.width / 2, self.height / 2
        return (self.center_x - hw, self.center_y - hh, self.center_x + hw, self.center_y + hh)


def logit(p: float) -> float:
    if not (0.0 < p < 1.0):
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    return math.log(p / (1.0 - p))


def write_tensor(t: DetectionFrameTensor, path: str | PathLike) -> None:
    """Write ``t`` as VFT1. Values are stored as float32."""
    payload = np.ascontiguousarray(t.data[0], dtype="<f4")
    header = _HEADER.pack(MAGIC, N_ATTRIBUTES, t.n_candidates, t.frame_width, t.frame_height)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_tensor(path: str | PathLike) -> DetectionFrameTensor:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise MalformedHeaderError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, n_attr, n, width, height = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic {magic!r}")
    if n_attr != N_ATTRIBUTES:
        raise MalformedHeaderError(f"{path}: expected 84 attribute rows, header says {n_attr}")
    if n == 0 or width == 0 or height == 0:
        raise MalformedHeaderError(f"{path}: zero candidate count or frame dimension")
    expected = N_ATTRIBUTES * n * 4
    body = raw[_HEADER.size:]
    if len(body) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload has {len(body) // 4} values, expected {N_ATTRIBUTES * n}"
        )
    if len(body) > expected:
        raise TrailingDataError(f"{path}: {len(body) - expected} bytes after payload")
    data = np.frombuffer(body, dtype="<f4").astype(np.float32).reshape(1, N_ATTRIBUTES, n)
    if not np.all(np.isfinite(data)):
        raise NonFiniteValueError(f"{path}: payload contains NaN or infinity")
    return DetectionFrameTensor(data=data, frame_width=width, frame_height=height)


def synthesize_tensor(
    persons: Sequence[GroundTruthPerson],
    n_candidates: int,
    frame_width: int,
    frame_height: int,
    background_logit: float = -10.0,
    duplicates: int = 0,
    rng: np.random.Generator | None = None,
) -> DetectionFrameTensor:
    """Build the tensor a detector would emit for ``persons``.

    Person ``k`` occupies candidate column ``k`` with its exact box and a
    person logit of ``ln(c / (1 - c))``. Every other logit is
    ``background_logit``. Columns without a person get zero boxes, or random
    in-frame boxes when ``rng`` is given.

    ``duplicates`` appends that many jittered near-copies of each person
    (slightly lower confidence) after the primary columns; these exercise
    duplicate suppression and need an ``rng`` for the jitter.
    """
    n_used = len(persons) * (1 + duplicates)
    if n_used > n_candidates:
        raise ValueError(f"{n_used} candidate columns needed, only {n_candidates} available")
    if duplicates and rng is None:
        rng = np.random.default_rng(0)

    data = np.full((1, N_ATTRIBUTES, n_candidates), background_logit, dtype=np.float64)
    if rng is not None:
        data[0, 0, :] = rng.uniform(0, frame_width, n_candidates)
        data[0, 1, :] = rng.uniform(0, frame_height, n_candidates)
        data[0, 2, :] = rng.uniform(8, frame_width / 4, n_candidates)
        data[0, 3, :] = rng.uniform(8, frame_height / 2, n_candidates)
    else:
        data[0, :N_BOX, :] = 0.0

    col = 0
    for p in persons:
        data[0, :N_BOX, col] = (p.center_x, p.center_y, p.width, p.height)
        data[0, N_BOX + PERSON_CLASS, col] = logit(p.confidence)
        col += 1
    for p in persons:
        for _ in range(duplicates):
            jitter = rng.uniform(-0.02, 0.02, 4) * (p.width, p.height, p.width, p.height)
            data[0, :N_BOX, col] = np.array((p.center_x, p.center_y, p.width, p.height)) + jitter
            data[0, N_BOX + PERSON_CLASS, col] = logit(p.confidence) - rng.uniform(0.05, 0.5)
            col += 1
    return DetectionFrameTensor(data=data, frame_width=frame_width, frame_height=frame_height)
