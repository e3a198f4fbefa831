"""Identity gallery: one stored feature per (person, orientation) slot.

Each person occupies up to three slots, one per orientation.  Lookups only
ever compare the query against slots of the query's own orientation; persons
without that slot are skipped, never compared cross-orientation.  A
successful match replaces the stored feature with the query (no averaging).

Person ids are allocated monotonically and never reused.  For fast lookup
the gallery keeps one flat feature matrix per orientation, updated in place,
so a scan is a single matrix-vector product.
"""

from __future__ import annotations

from typing import Iterator, Optional

import numpy as np

from .errors import DimensionMismatchError, GalleryFullError, UnknownIdError
from .types import DEFAULT_DIM, Orientation

_UNIT_TOL = 1e-6


class _OrientationIndex:
    """Append/update-in-place feature matrix for one orientation."""

    def __init__(self, d: int):
        self.d = d
        self.features = np.empty((0, d))
        self.ids: list[int] = []
        self.row_of: dict[int, int] = {}

    def put(self, person_id: int, feature: np.ndarray) -> None:
        row = self.row_of.get(person_id)
        if row is None:
            if len(self.ids) == self.features.shape[0]:
                grown = np.empty((max(16, 2 * self.features.shape[0]), self.d))
                grown[: self.features.shape[0]] = self.features
                self.features = grown
            row = len(self.ids)
            self.ids.append(person_id)
            self.row_of[person_id] = row
        self.features[row] = feature

    def scan(self, feature: np.ndarray) -> tuple[Optional[int], float]:
        """Best (person_id, similarity) over occupied slots; ties to lowest id."""
        n = len(self.ids)
        if n == 0:
            return None, -1.0
        sims = self.features[:n] @ feature
        best = float(sims.max())
        # Exact ties (duplicate features) resolve to the lowest person id.
        tied = np.flatnonzero(sims == best)
        best_id = min(self.ids[i] for i in tied)
        return best_id, best


class IdentityGallery:
    """The set of resolved identities and their per-orientation features."""

    def __init__(self, d: int = DEFAULT_DIM, capacity: Optional[int] = None):
        self.d = d
        self.capacity = capacity
        self.next_id = 0
        self._slots: dict[int, list[Optional[np.ndarray]]] = {}
        self._index = {ori: _OrientationIndex(d) for ori in Orientation}

    def __len__(self) -> int:
        return len(self._slots)

    def __contains__(self, person_id: int) -> bool:
        return person_id in self._slots

    def ids(self) -> Iterator[int]:
        return iter(self._slots)

    def get(self, person_id: int, orientation: Orientation) -> Optional[np.ndarray]:
        if person_id not in self._slots:
            raise UnknownIdError(f"person {person_id} not in gallery")
        return self._slots[person_id][int(orientation)]

    def _check_feature(self, feature: np.ndarray) -> np.ndarray:
        f = np.asarray(feature, dtype=np.float64)
        if f.shape != (self.d,):
            raise DimensionMismatchError(
                f"feature has shape {f.shape}, gallery expects ({self.d},)"
            )
        if abs(float(np.linalg.norm(f)) - 1.0) > _UNIT_TOL:
            raise ValueError("gallery features must be unit-normalized")
        return f

    def match(
        self, feature: np.ndarray, orientation: Orientation, tau: float
    ) -> Optional[int]:
        """Person id with the most similar slot for this orientation.

        Returns None when no slot of that orientation reaches ``tau``.
        """
        f = self._check_feature(feature)
        best_id, best = self._index[orientation].scan(f)
        if best_id is None or best < tau:
            return None
        return best_id

    def update(self, person_id: int, orientation: Orientation, feature: np.ndarray) -> None:
        """Replace the (person, orientation) slot with ``feature``."""
        if person_id not in self._slots:
            raise UnknownIdError(f"person {person_id} not in gallery")
        f = self._check_feature(feature)
        self._slots[person_id][int(orientation)] = f
        self._index[orientation].put(person_id, f)

    def add_identity(self, feature: np.ndarray, orientation: Orientation) -> int:
        """Allocate a new person id with a single occupied slot."""
        if self.capacity is not None and len(self._slots) >= self.capacity:
            raise GalleryFullError(f"gallery is at capacity {self.capacity}")
        f = self._check_feature(feature)
        person_id = self.next_id
        self.next_id += 1
        slots: list[Optional[np.ndarray]] = [None, None, None]
        slots[int(orientation)] = f
        self._slots[person_id] = slots
        self._index[orientation].put(person_id, f)
        return person_id

    def snapshot(self) -> list[tuple[int, Orientation, np.ndarray]]:
        """All occupied slots ordered by (person id, orientation)."""
        out = []
        for person_id in sorted(self._slots):
            for ori in Orientation:
                feat = self._slots[person_id][int(ori)]
                if feat is not None:
                    out.append((person_id, ori, feat))
        return out

    @classmethod
    def restore(
        cls,
        d: int,
        next_id: int,
        capacity: Optional[int],
        slots: list[tuple[int, Orientation, np.ndarray]],
    ) -> "IdentityGallery":
        """Rebuild a gallery from a snapshot; features are stored verbatim."""
        g = cls(d=d, capacity=capacity)
        for person_id, ori, feat in slots:
            f = g._check_feature(feat)
            if person_id not in g._slots:
                g._slots[person_id] = [None, None, None]
            g._slots[person_id][int(ori)] = f
            g._index[ori].put(person_id, f)
        if g._slots and next_id <= max(g._slots):
            raise ValueError("next_id must exceed every stored person id")
        g.next_id = next_id
        return g
