from __future__ import annotations

import pytest

from reidpipe.errors import InconsistentProfilesError, InvalidFpsError
from reidpipe.scheduler import (
    BackboneThresholds,
    capacity,
    derive_thresholds,
    select_backbone,
)
from reidpipe.types import DEFAULT_PROFILES, Backbone, LatencyProfile


def _profiles(pps18: float, pps34: float, pps50: float) -> tuple[LatencyProfile, ...]:
    return (
        LatencyProfile(Backbone.RESNET18, pps18),
        LatencyProfile(Backbone.RESNET34, pps34),
        LatencyProfile(Backbone.RESNET50, pps50),
    )


def test_capacity_is_throughput_over_fps() -> None:
    profile = LatencyProfile(Backbone.RESNET34, pps=600.0)
    assert capacity(profile, 25.0) == 24.0
    assert capacity(profile, 30.0) == 20.0


def test_capacity_rejects_bad_fps() -> None:
    profile = LatencyProfile(Backbone.RESNET18, pps=700.0)
    with pytest.raises(InvalidFpsError):
        capacity(profile, 0.0)
    with pytest.raises(InvalidFpsError):
        capacity(profile, -25.0)


def test_default_thresholds() -> None:
    th = derive_thresholds()
    assert (th.th1, th.th2) == (24, 26)
    assert th.target_fps == 25.0


def test_thresholds_follow_fps() -> None:
    # At 30 fps the capacities shrink: floor(605.556/30)=20, floor(637.34/30)+1=22.
    th = derive_thresholds(DEFAULT_PROFILES, target_fps=30.0)
    assert (th.th1, th.th2) == (20, 22)


def test_selection_boundaries() -> None:
    th = derive_thresholds()
    assert select_backbone(0, th) == Backbone.RESNET50
    assert select_backbone(10, th) == Backbone.RESNET50
    assert select_backbone(24, th) == Backbone.RESNET50
    assert select_backbone(25, th) == Backbone.RESNET34
    assert select_backbone(26, th) == Backbone.RESNET18
    assert select_backbone(30, th) == Backbone.RESNET18
    assert select_backbone(500, th) == Backbone.RESNET18


def test_selection_matches_piecewise_rule() -> None:
    th = BackboneThresholds(th1=7, th2=11)
    for n in range(40):
        if n <= 7:
            expected = Backbone.RESNET50
        elif n < 11:
            expected = Backbone.RESNET34
        else:
            expected = Backbone.RESNET18
        assert select_backbone(n, th) == expected


def test_selection_rejects_negative_counts() -> None:
    th = derive_thresholds()
    with pytest.raises(ValueError):
        select_backbone(-1, th)


def test_thresholds_must_be_ordered() -> None:
    with pytest.raises(InconsistentProfilesError):
        BackboneThresholds(th1=10, th2=10)
    with pytest.raises(InconsistentProfilesError):
        BackboneThresholds(th1=12, th2=5)


def test_derivation_requires_decreasing_throughput() -> None:
    with pytest.raises(InconsistentProfilesError):
        derive_thresholds(_profiles(600.0, 637.0, 605.0))
    with pytest.raises(InconsistentProfilesError):
        derive_thresholds(_profiles(700.0, 700.0, 600.0))


def test_derivation_requires_all_backbones() -> None:
    incomplete = (
        LatencyProfile(Backbone.RESNET18, 700.0),
        LatencyProfile(Backbone.RESNET50, 600.0),
    )
    with pytest.raises(InconsistentProfilesError):
        derive_thresholds(incomplete)
