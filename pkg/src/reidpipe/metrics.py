"""Run accounting: identification rate, FPS summaries, detection rates.

The identification rate is correct identifications over total identity
comparisons; one comparison happens per track confirmation.  Detection
rates are defined to partition the ground truth (PDR + MDR = 1): PDR is the
fraction of ground-truth boxes matched by a prediction at the IoU
threshold, MDR the unmatched fraction.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyDenominatorError, FrameMismatchError
from .types import Orientation

Box = tuple[float, float, float, float]  # x, y, w, h


def identification_rate(n_cor: int, n_all: int) -> float:
    if n_all <= 0:
        raise EmptyDenominatorError("no identity comparisons recorded")
    if n_cor > n_all:
        raise ValueError(f"n_cor {n_cor} exceeds n_all {n_all}")
    return n_cor / n_all


def fps_report(durations: Sequence[float]) -> dict[str, float]:
    """Summarize per-frame durations (seconds).

    ``mean_fps`` is frame count over total time; ``p50``/``p95`` are
    duration percentiles in seconds; ``min`` is the slowest frame expressed
    as instantaneous fps.
    """
    if len(durations) == 0:
        raise EmptyDenominatorError("no frame timings recorded")
    arr = np.asarray(durations, dtype=np.float64)
    total = float(arr.sum())
    worst = float(arr.max())
    return {
        "mean_fps": len(arr) / total if total > 0 else float("inf"),
        "p50": float(np.percentile(arr, 50)),
        "p95": float(np.percentile(arr, 95)),
        "min": 1.0 / worst if worst > 0 else float("inf"),
    }


def iou(a: Box, b: Box) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def detection_rates(
    predicted: dict[int, list[Box]],
    ground_truth: dict[int, list[Box]],
    iou_threshold: float = 0.5,
) -> tuple[float, float]:
    """Greedy per-frame IoU matching; returns (PDR, MDR) over ground truth."""
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    if set(predicted) != set(ground_truth):
        raise FrameMismatchError("predicted and ground-truth frame sets differ")
    total_gt = 0
    matched_gt = 0
    for frame, gt_boxes in ground_truth.items():
        total_gt += len(gt_boxes)
        pred_boxes = predicted[frame]
        candidates = sorted(
            (
                (-iou(p, g), pi, gi)
                for pi, p in enumerate(pred_boxes)
                for gi, g in enumerate(gt_boxes)
                if iou(p, g) >= iou_threshold
            ),
        )
        used_p: set[int] = set()
        used_g: set[int] = set()
        for _, pi, gi in candidates:
            if pi in used_p or gi in used_g:
                continue
            used_p.add(pi)
            used_g.add(gi)
            matched_gt += 1
    if total_gt == 0:
        raise EmptyDenominatorError("no ground-truth boxes")
    pdr = matched_gt / total_gt
    return pdr, 1.0 - pdr


class IdentityScorer:
    """Judges confirmation events against ground truth.

    Two modes:

    * registered: a fixed ``registry`` maps ground-truth identity to the
      gallery person id seeded for it before the run; a confirmation is
      correct when it resolves to exactly that id.
    * online (no registry): the run starts from an empty gallery.  A first
      confirmation of a (ground-truth identity, orientation) pair is
      correct when it mints a fresh person id; later confirmations must
      resolve to the id recorded for that pair.  After judging, the pair is
      remapped to whatever the event resolved to, so each event scores
      per-event consistency rather than compounding an earlier error.

    Clutter confirmations (no ground truth) always count as incorrect.
    """

    def __init__(self, registry: Optional[dict[int, int]] = None):
        self.registry = dict(registry) if registry is not None else None
        self._seen: dict[tuple[int, int], int] = {}
        self.n_cor = 0
        self.n_all = 0

    def score(
        self,
        gt_id: Optional[int],
        orientation: Orientation,
        person_id: int,
        was_new_id: bool,
    ) -> bool:
        self.n_all += 1
        if gt_id is None:
            return False
        if self.registry is not None:
            ok = not was_new_id and self.registry.get(gt_id) == person_id
        else:
            key = (gt_id, int(orientation))
            prev = self._seen.get(key)
            if prev is None:
                ok = was_new_id or person_id not in set(self._seen.values())
            else:
                ok = not was_new_id and person_id == prev
            self._seen[key] = person_id
        if ok:
            self.n_cor += 1
        return ok

    @property
    def rate(self) -> Optional[float]:
        if self.n_all == 0:
            return None
        return self.n_cor / self.n_all


@dataclass
class RunStats:
    """Counters and timings accumulated over one pipeline run."""

    frames: int = 0
    detections: int = 0
    confirmations: int = 0
    deletions: int = 0
    new_ids: int = 0
    n_cor: int = 0
    n_all: int = 0
    over_budget_frames: int = 0
    backbone_frames: Counter = field(default_factory=Counter)
    extract_times: list[float] = field(default_factory=list)
    match_times: list[float] = field(default_factory=list)

    @property
    def ir(self) -> Optional[float]:
        if self.n_all == 0:
            return None
        return identification_rate(self.n_cor, self.n_all)
