"""Probationary track state machine.

A track is opened for every unmatched detection and must prove itself within
a fixed window before its identity is resolved against the gallery: with the
default 5-frame window it is confirmed on its 4th match and deleted on its
2nd miss.  The opening detection counts as the first match.  One outcome
(match or miss) is recorded per processed frame, so every track resolves
within the window; the counters can never allow both fates.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidStateError
from .types import EmbeddingRecord, Orientation

WINDOW = 5
CONFIRM_MATCHES = 4
DELETE_MISSES = 2


class TrackState:
    Probation = 1
    Confirmed = 2
    Deleted = 3


class Track:
    """One candidate identity accumulating match/miss outcomes.

    ``feature`` and ``orientation`` always hold the latest matched
    observation (or an EMA of features when ``ema_alpha`` is set); they are
    what gets compared with the gallery at confirmation time.
    """

    def __init__(
        self,
        label: int,
        record: EmbeddingRecord,
        created_frame: int,
        confirm_matches: int = CONFIRM_MATCHES,
        delete_misses: int = DELETE_MISSES,
        ema_alpha: float | None = None,
    ):
        self.label = label
        self.matches = 1  # the opening detection is match #1
        self.misses = 0
        self.feature = record.feature
        self.orientation = record.orientation
        self.created_frame = created_frame
        self.state = TrackState.Probation
        self._confirm_matches = confirm_matches
        self._delete_misses = delete_misses
        self._ema_alpha = ema_alpha

    def mark_matched(self, record: EmbeddingRecord) -> None:
        """Record a match: adopt the new observation, confirm on the 4th."""
        if self.state != TrackState.Probation:
            raise InvalidStateError(f"track {self.label} is not in probation")
        if self._ema_alpha is None:
            self.feature = record.feature
        else:
            mixed = self._ema_alpha * self.feature + (1.0 - self._ema_alpha) * record.feature
            self.feature = mixed / np.linalg.norm(mixed)
        self.orientation = record.orientation
        self.matches += 1
        if self.matches >= self._confirm_matches:
            self.state = TrackState.Confirmed

    def mark_missed(self) -> None:
        """Record a miss; the 2nd miss deletes the track."""
        if self.state != TrackState.Probation:
            raise InvalidStateError(f"track {self.label} is not in probation")
        self.misses += 1
        if self.misses >= self._delete_misses:
            self.state = TrackState.Deleted

    def is_probation(self) -> bool:
        return self.state == TrackState.Probation

    def is_confirmed(self) -> bool:
        return self.state == TrackState.Confirmed

    def is_deleted(self) -> bool:
        return self.state == TrackState.Deleted


def step_track(track: Track, matched: bool, record: EmbeddingRecord | None = None) -> Track:
    """Apply one frame outcome to a probation track (mutates and returns it)."""
    if matched:
        if record is None:
            raise ValueError("a matched step requires the matching record")
        track.mark_matched(record)
    else:
        track.mark_missed()
    return track
