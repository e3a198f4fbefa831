from __future__ import annotations

import numpy as np
import pytest

from reidpipe.errors import DimensionMismatchError, GalleryFullError, UnknownIdError
from reidpipe.gallery import IdentityGallery
from reidpipe.types import Orientation, normalize


def _unit(seed: int, d: int = 8) -> np.ndarray:
    return normalize(np.random.default_rng(seed).standard_normal(d))


def test_empty_gallery_matches_nothing() -> None:
    gallery = IdentityGallery(d=8)
    assert len(gallery) == 0
    assert gallery.match(_unit(0), Orientation.FRONT, tau=-1.0) is None


def test_ids_are_sequential_and_never_reused() -> None:
    gallery = IdentityGallery(d=8)
    a = gallery.add_identity(_unit(0), Orientation.FRONT)
    b = gallery.add_identity(_unit(1), Orientation.BACK)
    assert (a, b) == (0, 1)
    assert gallery.next_id == 2
    restored = IdentityGallery.restore(8, gallery.next_id, None, gallery.snapshot())
    assert restored.add_identity(_unit(2), Orientation.FRONT) == 2


def test_match_returns_most_similar_identity() -> None:
    gallery = IdentityGallery(d=8)
    features = [_unit(i) for i in range(5)]
    for f in features:
        gallery.add_identity(f, Orientation.FRONT)
    for i, f in enumerate(features):
        assert gallery.match(f, Orientation.FRONT, tau=0.99) == i


def test_match_is_same_orientation_only() -> None:
    gallery = IdentityGallery(d=8)
    f = _unit(0)
    gallery.add_identity(f, Orientation.FRONT)
    assert gallery.match(f, Orientation.FRONT, tau=0.5) == 0
    assert gallery.match(f, Orientation.BACK, tau=-1.0) is None
    assert gallery.match(f, Orientation.SIDE, tau=-1.0) is None


def test_empty_slots_are_skipped_not_compared() -> None:
    gallery = IdentityGallery(d=8)
    f0, f1 = _unit(0), _unit(1)
    gallery.add_identity(f0, Orientation.FRONT)  # person 0: FRONT only
    gallery.add_identity(f1, Orientation.BACK)  # person 1: BACK only
    # A BACK query near person 0's FRONT feature must not see person 0.
    assert gallery.match(f0, Orientation.BACK, tau=0.9) is None
    assert gallery.match(f1, Orientation.BACK, tau=0.9) == 1


def test_below_threshold_returns_none() -> None:
    gallery = IdentityGallery(d=8)
    gallery.add_identity(_unit(0), Orientation.FRONT)
    probe = _unit(1)
    sim = float(probe @ gallery.get(0, Orientation.FRONT))
    assert gallery.match(probe, Orientation.FRONT, tau=sim + 0.01) is None
    assert gallery.match(probe, Orientation.FRONT, tau=sim - 0.01) == 0


def test_match_at_exact_threshold_accepts() -> None:
    gallery = IdentityGallery(d=8)
    f = _unit(0)
    gallery.add_identity(f, Orientation.SIDE)
    sim = float(f @ f)
    assert gallery.match(f, Orientation.SIDE, tau=sim) == 0


def test_update_replaces_stored_feature() -> None:
    gallery = IdentityGallery(d=8)
    old, new = _unit(0), _unit(1)
    gallery.add_identity(old, Orientation.FRONT)
    gallery.update(0, Orientation.FRONT, new)
    assert np.array_equal(gallery.get(0, Orientation.FRONT), new)
    assert gallery.match(new, Orientation.FRONT, tau=0.99) == 0
    assert gallery.match(old, Orientation.FRONT, tau=0.99) is None


def test_update_fills_other_orientation_slots() -> None:
    gallery = IdentityGallery(d=8)
    gallery.add_identity(_unit(0), Orientation.FRONT)
    side = _unit(1)
    gallery.update(0, Orientation.SIDE, side)
    assert gallery.match(side, Orientation.SIDE, tau=0.99) == 0
    assert gallery.get(0, Orientation.BACK) is None


def test_exact_ties_resolve_to_lowest_id() -> None:
    gallery = IdentityGallery(d=8)
    f = _unit(0)
    for _ in range(3):
        gallery.add_identity(f, Orientation.FRONT)
    assert gallery.match(f, Orientation.FRONT, tau=0.5) == 0


def test_capacity_limit() -> None:
    gallery = IdentityGallery(d=8, capacity=2)
    gallery.add_identity(_unit(0), Orientation.FRONT)
    gallery.add_identity(_unit(1), Orientation.FRONT)
    with pytest.raises(GalleryFullError):
        gallery.add_identity(_unit(2), Orientation.FRONT)
    # Updating existing persons is still allowed at capacity.
    gallery.update(0, Orientation.BACK, _unit(3))


def test_unknown_person_errors() -> None:
    gallery = IdentityGallery(d=8)
    with pytest.raises(UnknownIdError):
        gallery.get(5, Orientation.FRONT)
    with pytest.raises(UnknownIdError):
        gallery.update(5, Orientation.FRONT, _unit(0))


def test_features_must_be_unit_and_right_dimension() -> None:
    gallery = IdentityGallery(d=8)
    with pytest.raises(DimensionMismatchError):
        gallery.add_identity(normalize(np.ones(4)), Orientation.FRONT)
    with pytest.raises(ValueError):
        gallery.add_identity(np.full(8, 0.5), Orientation.FRONT)


def test_snapshot_is_sorted_and_restore_is_verbatim() -> None:
    gallery = IdentityGallery(d=8, capacity=50)
    rng = np.random.default_rng(7)
    for i in range(10):
        ori = Orientation(int(rng.integers(3)))
        gallery.add_identity(normalize(rng.standard_normal(8)), ori)
        if rng.random() < 0.5:
            gallery.update(i, Orientation(int(rng.integers(3))), normalize(rng.standard_normal(8)))
    slots = gallery.snapshot()
    keys = [(pid, int(ori)) for pid, ori, _ in slots]
    assert keys == sorted(keys)

    restored = IdentityGallery.restore(8, gallery.next_id, 50, slots)
    assert len(restored) == len(gallery)
    assert restored.capacity == 50
    for pid, ori, feat in slots:
        assert np.array_equal(restored.get(pid, ori), feat)
        assert restored.match(feat, ori, tau=0.999999) == pid


def test_restore_rejects_stale_next_id() -> None:
    gallery = IdentityGallery(d=8)
    gallery.add_identity(_unit(0), Orientation.FRONT)
    gallery.add_identity(_unit(1), Orientation.FRONT)
    with pytest.raises(ValueError):
        IdentityGallery.restore(8, 1, None, gallery.snapshot())


def test_large_table_scan_stays_correct() -> None:
    # Push the per-orientation index through several growth steps.
    gallery = IdentityGallery(d=16)
    rng = np.random.default_rng(11)
    stored = {}
    for i in range(200):
        f = normalize(rng.standard_normal(16))
        ori = Orientation(i % 3)
        pid = gallery.add_identity(f, ori)
        stored[pid] = (ori, f)
    for pid, (ori, f) in stored.items():
        assert gallery.match(f, ori, tau=0.999999) == pid
