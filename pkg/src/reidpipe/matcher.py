"""Per-frame association and the identity-resolution engine.

Each frame runs the same sequence: pick a backbone for the frame's person
count, extract embeddings, associate them with probation tracks by cosine
similarity (greedy one-to-one), apply one match/miss outcome to every track,
open new tracks for unmatched detections, and resolve freshly confirmed
tracks against the gallery (update the slot on a hit, mint a new person id
on a miss).  Appearance only: no motion model, no box gating.

The engine is single-writer: one logical caller feeds frames in strictly
increasing order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, OutOfOrderFrameError
from .gallery import IdentityGallery
from .providers import FeatureProvider
from .scheduler import BackboneThresholds, select_backbone
from .tracks import CONFIRM_MATCHES, DELETE_MISSES, Track
from .types import Backbone, DetectionEvent, EmbeddingRecord, Orientation

DEFAULT_TAU_CONTAINER = 0.7
DEFAULT_TAU_TABLE = 0.6


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors, clamped to [-1, 1] against rounding."""
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def similarity_matrix(records: Sequence[EmbeddingRecord], tracks: Sequence[Track]) -> np.ndarray:
    """Pairwise cosine similarity, records as rows, tracks as columns."""
    if not records or not tracks:
        return np.zeros((len(records), len(tracks)))
    q = np.stack([r.feature for r in records])
    t = np.stack([trk.feature for trk in tracks])
    return np.clip(q @ t.T, -1.0, 1.0)


@dataclass(frozen=True)
class Assignment:
    """One-to-one detection/track pairing for a frame."""

    pairs: tuple[tuple[int, int], ...]  # (det_index, track label)
    unmatched_detections: tuple[int, ...]
    unmatched_tracks: tuple[int, ...]


def match_to_tracks(
    records: Sequence[EmbeddingRecord],
    tracks: Sequence[Track],
    tau: float = DEFAULT_TAU_CONTAINER,
    det_indices: Optional[Sequence[int]] = None,
    optimal: bool = False,
) -> Assignment:
    """Associate detections with probation tracks.

    Greedy by default: candidate pairs at or above ``tau`` are taken in
    descending similarity order (ties preferring the lower track label,
    then the lower detection index), each side used at most once.
    ``optimal=True`` instead maximizes total similarity over pairs above
    ``tau`` (for comparison runs; not the production rule).
    """
    if det_indices is None:
        det_indices = list(range(len(records)))
    sims = similarity_matrix(records, tracks)
    pairs: list[tuple[int, int]] = []
    used_rows: set[int] = set()
    used_cols: set[int] = set()

    if optimal and records and tracks:
        from scipy.optimize import linear_sum_assignment

        rows, cols = linear_sum_assignment(-sims)
        chosen = [(r, c) for r, c in zip(rows, cols) if sims[r, c] >= tau]
        chosen.sort(key=lambda rc: (tracks[rc[1]].label, det_indices[rc[0]]))
        for r, c in chosen:
            used_rows.add(r)
            used_cols.add(c)
            pairs.append((det_indices[r], tracks[c].label))
    else:
        candidates = [
            (-sims[r, c], tracks[c].label, det_indices[r], r, c)
            for r in range(len(records))
            for c in range(len(tracks))
            if sims[r, c] >= tau
        ]
        candidates.sort()
        for _, label, det, r, c in candidates:
            if r in used_rows or c in used_cols:
                continue
            used_rows.add(r)
            used_cols.add(c)
            pairs.append((det, label))

    unmatched_dets = tuple(
        det_indices[r] for r in range(len(records)) if r not in used_rows
    )
    unmatched_trks = tuple(
        tracks[c].label for c in range(len(tracks)) if c not in used_cols
    )
    return Assignment(
        pairs=tuple(pairs),
        unmatched_detections=unmatched_dets,
        unmatched_tracks=unmatched_trks,
    )


@dataclass(frozen=True)
class Confirmation:
    """A track that reached its 4th match and got resolved to a person id."""

    label: int
    person_id: int
    was_new_id: bool
    orientation: Orientation


@dataclass(frozen=True)
class FrameReport:
    frame: int
    n_detections: int
    backbone: Backbone
    simulated_elapsed: float
    assignment: Assignment
    spawned: tuple[tuple[int, int], ...]  # (det_index, new track label)
    confirmations: tuple[Confirmation, ...]
    deletions: tuple[int, ...]  # track labels


@dataclass
class EngineConfig:
    tau_container: float = DEFAULT_TAU_CONTAINER
    tau_table: float = DEFAULT_TAU_TABLE
    confirm_matches: int = CONFIRM_MATCHES
    delete_misses: int = DELETE_MISSES
    optimal_assignment: bool = False
    ema_alpha: Optional[float] = None


class Engine:
    """Streaming identity-resolution engine (tracks + gallery + scheduler)."""

    def __init__(
        self,
        provider: FeatureProvider,
        thresholds: BackboneThresholds,
        gallery: Optional[IdentityGallery] = None,
        config: Optional[EngineConfig] = None,
    ):
        self.provider = provider
        self.thresholds = thresholds
        self.gallery = gallery if gallery is not None else IdentityGallery(d=provider.d)
        self.config = config if config is not None else EngineConfig()
        self.tracks: list[Track] = []
        self.next_label = 0
        self.last_frame: Optional[int] = None

    def process_frame(self, frame: int, events: Sequence[DetectionEvent]) -> FrameReport:
        """Run one frame through the full pipeline and report what happened."""
        if self.last_frame is not None and frame <= self.last_frame:
            raise OutOfOrderFrameError(
                f"frame {frame} after frame {self.last_frame}"
            )
        self.last_frame = frame

        backbone = select_backbone(len(events), self.thresholds)
        records, elapsed = self.provider.extract(events, backbone)
        det_indices = [e.det_index for e in events]

        assignment = match_to_tracks(
            records,
            self.tracks,
            tau=self.config.tau_container,
            det_indices=det_indices,
            optimal=self.config.optimal_assignment,
        )

        # One outcome per existing probation track: match or miss.
        record_of = {e.det_index: r for e, r in zip(events, records)}
        matched_label = {label: det for det, label in assignment.pairs}
        for track in self.tracks:
            if track.label in matched_label:
                track.mark_matched(record_of[matched_label[track.label]])
            else:
                track.mark_missed()

        # Unmatched detections open new tracks (their first match).
        spawned = []
        for det in sorted(assignment.unmatched_detections):
            track = Track(
                label=self.next_label,
                record=record_of[det],
                created_frame=frame,
                confirm_matches=self.config.confirm_matches,
                delete_misses=self.config.delete_misses,
                ema_alpha=self.config.ema_alpha,
            )
            self.next_label += 1
            self.tracks.append(track)
            spawned.append((det, track.label))

        # Resolve confirmed tracks against the gallery; drop resolved/dead ones.
        confirmations = []
        deletions = []
        for track in self.tracks:
            if track.is_confirmed():
                person_id = self.gallery.match(
                    track.feature, track.orientation, self.config.tau_table
                )
                if person_id is None:
                    person_id = self.gallery.add_identity(track.feature, track.orientation)
                    was_new = True
                else:
                    self.gallery.update(person_id, track.orientation, track.feature)
                    was_new = False
                confirmations.append(
                    Confirmation(track.label, person_id, was_new, track.orientation)
                )
            elif track.is_deleted():
                deletions.append(track.label)
        self.tracks = [t for t in self.tracks if t.is_probation()]

        return FrameReport(
            frame=frame,
            n_detections=len(events),
            backbone=backbone,
            simulated_elapsed=elapsed,
            assignment=assignment,
            spawned=tuple(spawned),
            confirmations=tuple(confirmations),
            deletions=tuple(deletions),
        )
