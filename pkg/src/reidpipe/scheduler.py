"""Backbone selection by per-frame person count.

The deepest backbone that can keep up with the current frame is preferred:
each backbone's capacity is the number of persons it can embed within one
frame interval (``pps / target_fps``).  Two person-count thresholds split the
range:

    n <= th1          -> ResNet-50   (deepest, most accurate)
    th1 < n < th2     -> ResNet-34
    n >= th2          -> ResNet-18   (shallowest, best effort)

``th1`` is the floor of ResNet-50's capacity.  ``th2`` is the floor of
ResNet-34's capacity plus one, so integer counts just above ResNet-50's
capacity still land on ResNet-34 while the strict middle interval keeps the
branch structure above.  Beyond ResNet-18's capacity the selection stays on
ResNet-18 and the frame is flagged over budget instead of dropping anyone.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import floor
from typing import Iterable

from .errors import InconsistentProfilesError, InvalidFpsError
from .types import Backbone, DEFAULT_PROFILES, LatencyProfile

DEFAULT_TARGET_FPS = 25.0


def capacity(profile: LatencyProfile, target_fps: float) -> float:
    """Persons this backbone can embed within one frame interval."""
    if target_fps <= 0:
        raise InvalidFpsError(f"target_fps must be positive, got {target_fps}")
    return profile.pps / target_fps


def _by_backbone(profiles: Iterable[LatencyProfile]) -> dict[Backbone, LatencyProfile]:
    table = {p.backbone: p for p in profiles}
    missing = [b for b in Backbone if b not in table]
    if missing:
        raise InconsistentProfilesError(
            f"missing profiles for {[b.label for b in missing]}"
        )
    return table


@dataclass(frozen=True)
class BackboneThresholds:
    """Person-count thresholds driving backbone selection."""

    th1: int
    th2: int
    target_fps: float = DEFAULT_TARGET_FPS
    profiles: tuple[LatencyProfile, ...] = DEFAULT_PROFILES

    def __post_init__(self):
        if self.th1 >= self.th2:
            raise InconsistentProfilesError(
                f"th1 must be below th2, got th1={self.th1} th2={self.th2}"
            )


def derive_thresholds(
    profiles: Iterable[LatencyProfile] = DEFAULT_PROFILES,
    target_fps: float = DEFAULT_TARGET_FPS,
) -> BackboneThresholds:
    """Compute selection thresholds from measured throughput.

    Requires all three backbones with strictly decreasing throughput from
    ResNet-18 down to ResNet-50.
    """
    table = _by_backbone(profiles)
    pps18 = table[Backbone.RESNET18].pps
    pps34 = table[Backbone.RESNET34].pps
    pps50 = table[Backbone.RESNET50].pps
    if not (pps18 > pps34 > pps50):
        raise InconsistentProfilesError(
            "throughput must strictly decrease with depth, got "
            f"{pps18}/{pps34}/{pps50}"
        )
    th1 = floor(capacity(table[Backbone.RESNET50], target_fps))
    th2 = floor(capacity(table[Backbone.RESNET34], target_fps)) + 1
    return BackboneThresholds(
        th1=th1, th2=th2, target_fps=target_fps, profiles=tuple(table.values())
    )


def select_backbone(n: int, thresholds: BackboneThresholds) -> Backbone:
    """Pick the backbone for a frame containing ``n`` persons."""
    if n < 0:
        raise ValueError(f"person count must be non-negative, got {n}")
    if n <= thresholds.th1:
        return Backbone.RESNET50
    if n < thresholds.th2:
        return Backbone.RESNET34
    return Backbone.RESNET18
