"""Core domain types shared by every stage of the pipeline.

Feature vectors are L2-normalized once, on ingestion, so that cosine
similarity downstream is a plain dot product.  The feature dimension is a
runtime parameter (``DEFAULT_DIM`` = 512 in production); tests shrink it for
brute-force checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Union

import numpy as np

from .errors import DimensionMismatchError, ZeroVectorError

DEFAULT_DIM = 512

# A person observation is the identity feature plus a 3-way orientation score.
ORIENTATION_SCORE_DIM = 3


class Orientation(IntEnum):
    FRONT = 0
    BACK = 1
    SIDE = 2


def normalize(feature: np.ndarray) -> np.ndarray:
    """Return ``feature`` scaled to unit L2 norm (direction preserved)."""
    v = np.asarray(feature, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        raise ZeroVectorError("cannot normalize a zero vector")
    return v / norm


def classify_orientation(scores: np.ndarray) -> Orientation:
    """Argmax over the 3 orientation scores; ties resolve to the lowest code."""
    s = np.asarray(scores, dtype=np.float64)
    if s.shape != (ORIENTATION_SCORE_DIM,):
        raise DimensionMismatchError(
            f"orientation scores must have shape (3,), got {s.shape}"
        )
    return Orientation(int(np.argmax(s)))


@dataclass(frozen=True)
class EmbeddingRecord:
    """One extracted person observation: unit identity feature + orientation.

    ``orientation`` is always the argmax of ``orientation_scores`` (lowest
    code wins ties); it is derived in :meth:`ingest` rather than trusted from
    the caller.
    """

    feature: np.ndarray
    orientation_scores: np.ndarray
    orientation: Orientation

    @classmethod
    def ingest(cls, feature: np.ndarray, orientation_scores: np.ndarray) -> "EmbeddingRecord":
        feat = normalize(feature)
        scores = np.asarray(orientation_scores, dtype=np.float64)
        ori = classify_orientation(scores)
        rec = cls(feature=feat, orientation_scores=scores, orientation=ori)
        return rec

    @property
    def dim(self) -> int:
        return int(self.feature.shape[0])


@dataclass(frozen=True)
class CropRef:
    """Reference to a person crop the synthetic provider can resolve.

    Stands in for the image fragment a detector would hand to the feature
    extractor.  ``clutter=True`` keys a one-off false-positive identity.
    """

    ident: int
    orientation: Orientation
    draw_index: int
    clutter: bool = False


@dataclass(frozen=True)
class DetectionEvent:
    """One detector output within a frame.

    ``payload`` is either a precomputed :class:`EmbeddingRecord` (replayed
    streams) or a :class:`CropRef` (synthetic scenarios).  ``gt_id`` is the
    ground-truth identity and exists only for evaluation; the matcher never
    reads it.
    """

    frame: int
    det_index: int
    bbox: tuple[float, float, float, float]
    gt_id: Optional[int] = None
    payload: Union[EmbeddingRecord, CropRef, None] = None

    def __post_init__(self):
        x, y, w, h = self.bbox
        if w <= 0 or h <= 0:
            raise ValueError(f"bbox must have positive width/height, got {self.bbox}")


class Backbone(IntEnum):
    """Feature-extraction backbones, ordered by depth."""

    RESNET18 = 18
    RESNET34 = 34
    RESNET50 = 50

    @property
    def label(self) -> str:
        return f"resnet{int(self)}"

    @classmethod
    def from_label(cls, label: str) -> "Backbone":
        for b in cls:
            if b.label == label:
                return b
        raise ValueError(f"unknown backbone {label!r}")


@dataclass(frozen=True)
class LatencyProfile:
    """Measured extraction throughput of one backbone.

    ``pps`` is persons per second; ``map_score`` is optional accuracy
    metadata and is never used in any computation.
    """

    backbone: Backbone
    pps: float
    map_score: Optional[float] = None

    def __post_init__(self):
        if self.pps <= 0:
            raise ValueError(f"pps must be positive, got {self.pps}")


# Throughput measured on the reference hardware, and the published accuracy
# of each backbone (metadata only).
DEFAULT_PROFILES = (
    LatencyProfile(Backbone.RESNET18, pps=709.321, map_score=91.8),
    LatencyProfile(Backbone.RESNET34, pps=637.340, map_score=93.2),
    LatencyProfile(Backbone.RESNET50, pps=605.556, map_score=93.2),
)
