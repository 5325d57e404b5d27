"""Person detections from a raw detection tensor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_io import N_BOX, PERSON_CLASS, DetectionFrameTensor


@dataclass(frozen=True)
class PersonDetection:
    x1: float
    y1: float
    x2: float
    y2: float
    score: float
    class_index: int = PERSON_CLASS

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def center_x(self) -> float:
        return (self.x1 + self.x2) / 2

    def to_dict(self) -> dict:
        return {"x1": self.x1, "y1": self.y1, "x2": self.x2, "y2": self.y2, "score": self.score}


@dataclass(frozen=True)
class PostprocConfig:
    tau: float = 0.65
    nms_iou: float | None = 0.45  # None disables suppression

    def __post_init__(self):
        if not (0.0 < self.tau < 1.0):
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.nms_iou is not None and not (0.0 < self.nms_iou <= 1.0):
            raise ValueError(f"nms_iou must lie in (0, 1] or be None, got {self.nms_iou}")


def class_probabilities(logits) -> np.ndarray:
    """Elementwise logistic sigmoid."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits must be finite")
    # split by sign so exp never overflows
    out = np.empty_like(logits)
    pos = logits >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-logits[pos]))
    e = np.exp(logits[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def iou(a: PersonDetection, b: PersonDetection) -> float:
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.width * a.height + b.width * b.height - inter
    return inter / union if union > 0 else 0.0


def suppress_duplicates(dets: list[PersonDetection], iou_threshold: float) -> list[PersonDetection]:
    """Greedy NMS. ``dets`` must already be sorted by descending score."""
    kept: list[PersonDetection] = []
    for d in dets:
        if all(iou(d, k) <= iou_threshold for k in kept):
            kept.append(d)
    return kept


def decode(t: DetectionFrameTensor, cfg: PostprocConfig = PostprocConfig()) -> list[PersonDetection]:
    """Threshold, convert and (optionally) de-duplicate the person candidates of ``t``.

    A candidate is kept when its best class probability exceeds ``cfg.tau``
    strictly and that best class is the person class.
    """
    logits = t.logits  # (N, 80)
    # the sigmoid is strictly increasing, so max/argmax over probabilities equal
    # max/argmax over logits; only the winning logit needs converting
    best = np.argmax(logits, axis=1)
    scores = class_probabilities(logits[np.arange(logits.shape[0]), best])
    keep = np.flatnonzero((scores > cfg.tau) & (best == PERSON_CLASS))
    if keep.size == 0:
        return []

    boxes = np.asarray(t.boxes, dtype=np.float64)
    dets = []
    for m in keep:
        cx, cy, w, h = boxes[m, :N_BOX]
        dets.append(
            PersonDetection(
                x1=float(cx - w / 2),
                y1=float(cy - h / 2),
                x2=float(cx + w / 2),
                y2=float(cy + h / 2),
                score=float(scores[m]),
            )
        )
    # stable sort keeps column order among equal scores
    dets.sort(key=lambda d: -d.score)
    if cfg.nms_iou is not None:
        dets = suppress_duplicates(dets, cfg.nms_iou)
    return dets
