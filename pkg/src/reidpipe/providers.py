"""Feature-extraction providers.

Real CNN inference is out of scope; two providers stand in for it:

* :class:`SyntheticProvider` resolves :class:`CropRef` payloads against
  per-identity anchor features drawn uniformly on the unit sphere, with
  seeded Gaussian noise.  Distinct orientations of the same identity get
  independent anchors, so matching only works within an orientation.
* :class:`PassthroughProvider` accepts precomputed embeddings (replayed
  detection streams) and normalizes them.

Extraction time is simulated from the backbone's measured throughput
(``count / pps``) so speed experiments reproduce on any machine.  All
randomness is keyed by ``(seed, identity, orientation, draw_index)``; the
draw order never changes the values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, MissingPayloadError
from .types import (
    Backbone,
    CropRef,
    DEFAULT_DIM,
    DEFAULT_PROFILES,
    DetectionEvent,
    EmbeddingRecord,
    LatencyProfile,
    Orientation,
)
from .types import classify_orientation as _classify_scores

# Sub-stream tags keeping anchor draws, feature noise, score noise and
# orientation flips statistically independent under one seed.
_NS_IDENTITY = 0
_NS_CLUTTER = 1
_TAG_ANCHOR = 0
_TAG_FEATURE = 1
_TAG_SCORES = 2
_TAG_FLIP = 3


def _rng(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(key))))


@dataclass(frozen=True)
class NoiseModel:
    """Observation noise applied to anchor features.

    ``sigma`` is the expected L2 norm of the perturbation (per-component
    std ``sigma / sqrt(D)``), so its effect on cosine similarity does not
    depend on the feature dimension.  ``orientation_flip_prob`` is the
    chance the reported orientation is wrong, modelling classification
    errors of the extractor.
    """

    sigma: float = 0.05
    seed: int = 0
    orientation_flip_prob: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if not 0.0 <= self.orientation_flip_prob <= 1.0:
            raise ValueError("orientation_flip_prob must be within [0, 1]")


@dataclass(frozen=True)
class IdentityAnchor:
    """Ground-truth identity with one unit anchor feature per orientation."""

    gt_id: int
    anchors: np.ndarray  # shape (3, D), rows unit-normalized


def make_anchor(seed: int, ident: int, d: int = DEFAULT_DIM, clutter: bool = False) -> IdentityAnchor:
    """Draw the three orientation anchors of one identity."""
    ns = _NS_CLUTTER if clutter else _NS_IDENTITY
    rows = []
    for ori in Orientation:
        v = _rng(seed, ns, ident, int(ori), _TAG_ANCHOR).standard_normal(d)
        rows.append(v / np.linalg.norm(v))
    return IdentityAnchor(gt_id=ident, anchors=np.stack(rows))


def synth_embedding(
    anchor: IdentityAnchor,
    orientation: Orientation,
    noise: NoiseModel,
    draw_index: int,
    clutter: bool = False,
) -> EmbeddingRecord:
    """Synthesize one observation of ``anchor`` seen from ``orientation``."""
    d = anchor.anchors.shape[1]
    ns = _NS_CLUTTER if clutter else _NS_IDENTITY
    key = (noise.seed, ns, anchor.gt_id, int(orientation), draw_index)

    base = anchor.anchors[int(orientation)]
    if noise.sigma == 0.0:
        feature = base
    else:
        eps = _rng(*key, _TAG_FEATURE).standard_normal(d) * (noise.sigma / np.sqrt(d))
        feature = base + eps

    reported = orientation
    if noise.orientation_flip_prob > 0.0:
        flip_rng = _rng(*key, _TAG_FLIP)
        if flip_rng.random() < noise.orientation_flip_prob:
            others = [o for o in Orientation if o != orientation]
            reported = others[int(flip_rng.integers(len(others)))]

    scores = np.zeros(3)
    scores[int(reported)] = 1.0
    if noise.sigma > 0.0:
        scores = scores + _rng(*key, _TAG_SCORES).standard_normal(3) * (
            noise.sigma / np.sqrt(3)
        )
    return EmbeddingRecord.ingest(feature, scores)


def classify_orientation(record: EmbeddingRecord) -> Orientation:
    """Orientation of a record: score argmax, ties to the lowest code."""
    return _classify_scores(record.orientation_scores)


class FeatureProvider:
    """Base provider: payload resolution plus the simulated latency model."""

    def __init__(self, d: int = DEFAULT_DIM, profiles: Sequence[LatencyProfile] = DEFAULT_PROFILES):
        self.d = d
        self._pps = {p.backbone: p.pps for p in profiles}
        self.profiles = tuple(profiles)

    def resolve(self, event: DetectionEvent) -> EmbeddingRecord:
        raise NotImplementedError

    def _passthrough(self, record: EmbeddingRecord) -> EmbeddingRecord:
        if record.dim != self.d:
            raise DimensionMismatchError(
                f"embedding has dimension {record.dim}, provider expects {self.d}"
            )
        # Re-ingest: guarantees unit norm even for hand-built records.
        return EmbeddingRecord.ingest(record.feature, record.orientation_scores)

    def extract(
        self, events: Iterable[DetectionEvent], backbone: Backbone
    ) -> tuple[list[EmbeddingRecord], float]:
        """Resolve every event, in input order.

        Returns the records plus the simulated extraction time
        ``count / pps(backbone)`` in seconds.
        """
        records = [self.resolve(e) for e in events]
        elapsed = len(records) / self._pps[backbone]
        return records, elapsed


class PassthroughProvider(FeatureProvider):
    """Provider for replayed streams carrying precomputed embeddings."""

    def resolve(self, event: DetectionEvent) -> EmbeddingRecord:
        if not isinstance(event.payload, EmbeddingRecord):
            raise MissingPayloadError(
                f"frame {event.frame} det {event.det_index} has no embedding payload"
            )
        return self._passthrough(event.payload)


class SyntheticProvider(FeatureProvider):
    """Provider generating observations from seeded identity anchors."""

    def __init__(
        self,
        d: int = DEFAULT_DIM,
        noise: Optional[NoiseModel] = None,
        profiles: Sequence[LatencyProfile] = DEFAULT_PROFILES,
    ):
        super().__init__(d=d, profiles=profiles)
        self.noise = noise if noise is not None else NoiseModel()
        self._anchors: dict[tuple[int, bool], IdentityAnchor] = {}

    def anchor(self, ident: int, clutter: bool = False) -> IdentityAnchor:
        key = (ident, clutter)
        if key not in self._anchors:
            self._anchors[key] = make_anchor(self.noise.seed, ident, self.d, clutter=clutter)
        return self._anchors[key]

    def resolve(self, event: DetectionEvent) -> EmbeddingRecord:
        payload = event.payload
        if isinstance(payload, EmbeddingRecord):
            return self._passthrough(payload)
        if isinstance(payload, CropRef):
            return synth_embedding(
                self.anchor(payload.ident, clutter=payload.clutter),
                payload.orientation,
                self.noise,
                payload.draw_index,
                clutter=payload.clutter,
            )
        raise MissingPayloadError(
            f"frame {event.frame} det {event.det_index} has no resolvable payload"
        )
