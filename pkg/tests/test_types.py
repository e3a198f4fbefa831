from __future__ import annotations

import numpy as np
import pytest

from reidpipe.errors import DimensionMismatchError, ZeroVectorError
from reidpipe.types import (
    DEFAULT_PROFILES,
    Backbone,
    DetectionEvent,
    EmbeddingRecord,
    LatencyProfile,
    Orientation,
    classify_orientation,
    normalize,
)


def test_normalize_produces_unit_vectors() -> None:
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = rng.standard_normal(int(rng.integers(1, 64)))
        u = normalize(v)
        assert abs(np.linalg.norm(u) - 1.0) < 1e-12
        assert np.allclose(u * np.linalg.norm(v), v)


def test_normalize_is_scale_invariant() -> None:
    rng = np.random.default_rng(1)
    v = rng.standard_normal(16)
    for scale in (0.001, 0.5, 3.0, 1e6):
        assert np.allclose(normalize(scale * v), normalize(v))


def test_normalize_rejects_zero_vector() -> None:
    with pytest.raises(ZeroVectorError):
        normalize(np.zeros(8))
    with pytest.raises(ZeroVectorError):
        normalize(np.full(8, 1e-14))


def test_classify_orientation_argmax() -> None:
    assert classify_orientation(np.array([1.0, 0.0, 0.0])) == Orientation.FRONT
    assert classify_orientation(np.array([0.1, 0.9, 0.3])) == Orientation.BACK
    assert classify_orientation(np.array([-2.0, -3.0, -1.0])) == Orientation.SIDE


def test_classify_orientation_ties_resolve_to_lowest_code() -> None:
    assert classify_orientation(np.array([0.5, 0.5, 0.1])) == Orientation.FRONT
    assert classify_orientation(np.array([0.1, 0.5, 0.5])) == Orientation.BACK
    assert classify_orientation(np.array([0.5, 0.5, 0.5])) == Orientation.FRONT


def test_classify_orientation_requires_three_scores() -> None:
    with pytest.raises(DimensionMismatchError):
        classify_orientation(np.array([0.2, 0.8]))
    with pytest.raises(DimensionMismatchError):
        classify_orientation(np.zeros((3, 1)))


def test_ingest_normalizes_and_derives_orientation() -> None:
    rng = np.random.default_rng(2)
    raw = rng.standard_normal(32) * 10.0
    record = EmbeddingRecord.ingest(raw, np.array([0.2, 0.7, 0.1]))
    assert abs(np.linalg.norm(record.feature) - 1.0) < 1e-12
    assert record.orientation == Orientation.BACK
    assert record.dim == 32
    assert np.allclose(record.feature, normalize(raw))


def test_orientation_codes() -> None:
    assert int(Orientation.FRONT) == 0
    assert int(Orientation.BACK) == 1
    assert int(Orientation.SIDE) == 2


def test_detection_event_rejects_degenerate_boxes() -> None:
    with pytest.raises(ValueError):
        DetectionEvent(frame=0, det_index=0, bbox=(0.0, 0.0, 0.0, 10.0))
    with pytest.raises(ValueError):
        DetectionEvent(frame=0, det_index=0, bbox=(0.0, 0.0, 10.0, -1.0))
    event = DetectionEvent(frame=3, det_index=1, bbox=(5.0, 6.0, 7.0, 8.0))
    assert event.gt_id is None
    assert event.payload is None


def test_backbone_labels_round_trip() -> None:
    for backbone in Backbone:
        assert Backbone.from_label(backbone.label) == backbone
    assert Backbone.RESNET50.label == "resnet50"
    with pytest.raises(ValueError):
        Backbone.from_label("vgg16")


def test_latency_profile_requires_positive_throughput() -> None:
    with pytest.raises(ValueError):
        LatencyProfile(Backbone.RESNET18, pps=0.0)
    with pytest.raises(ValueError):
        LatencyProfile(Backbone.RESNET18, pps=-5.0)


def test_default_profiles_measured_throughput() -> None:
    pps = {p.backbone: p.pps for p in DEFAULT_PROFILES}
    assert pps[Backbone.RESNET18] == 709.321
    assert pps[Backbone.RESNET34] == 637.340
    assert pps[Backbone.RESNET50] == 605.556
