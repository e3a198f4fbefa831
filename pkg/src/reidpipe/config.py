"""Flat key-value run configuration.

One config drives scenario generation, the engine and the evaluation
protocol.  Files are plain ``key = value`` lines ('#' starts a comment);
every key has a default, and command-line flags override file values.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .errors import InvalidConfigError
from .matcher import EngineConfig
from .providers import NoiseModel
from .scheduler import BackboneThresholds, derive_thresholds
from .simulator import Scenario
from .types import Backbone, LatencyProfile


@dataclass(frozen=True)
class RunConfig:
    # feature space
    d: int = 512
    seed: int = 0
    # scheduler
    target_fps: float = 25.0
    pps_resnet18: float = 709.321
    pps_resnet34: float = 637.340
    pps_resnet50: float = 605.556
    th1: Optional[int] = None  # direct threshold override; None derives from pps
    th2: Optional[int] = None
    # matching
    tau_container: float = 0.7
    tau_table: float = 0.6
    window: int = 5
    confirm_matches: int = 4
    delete_misses: int = 2
    assignment: str = "greedy"  # or "optimal"
    ema_alpha: Optional[float] = None  # None = replace feature on match
    capacity: Optional[int] = None
    # evaluation protocol
    gallery_init: str = "anchors"  # pre-seed scenario identities; or "empty"
    # synthetic scenario
    n_identities: int = 100
    n_frames: int = 500
    sigma: float = 0.05
    orientation_flip_prob: float = 0.0
    miss_rate: float = 0.0
    clutter_rate: float = 0.0
    mean_concurrency: float = 16.0
    peak_concurrency: int = 30
    visit_min: int = 10
    visit_max: int = 100
    orientation_switch_prob: float = 0.02
    frame_width: float = 1920.0
    frame_height: float = 1080.0

    def validate(self) -> "RunConfig":
        if self.d < 1:
            raise InvalidConfigError("d must be at least 1")
        if self.target_fps <= 0:
            raise InvalidConfigError("target_fps must be positive")
        if self.confirm_matches > self.window or self.delete_misses > self.window:
            raise InvalidConfigError("confirm/delete counts cannot exceed the window")
        if self.confirm_matches + self.delete_misses - 1 > self.window:
            raise InvalidConfigError(
                "confirm_matches + delete_misses - 1 must fit in the window"
            )
        if self.assignment not in ("greedy", "optimal"):
            raise InvalidConfigError(f"unknown assignment mode {self.assignment!r}")
        if self.gallery_init not in ("anchors", "empty"):
            raise InvalidConfigError(f"unknown gallery_init {self.gallery_init!r}")
        if (self.th1 is None) != (self.th2 is None):
            raise InvalidConfigError("th1 and th2 must be overridden together")
        for name in ("tau_container", "tau_table"):
            v = getattr(self, name)
            if not -1.0 <= v <= 1.0:
                raise InvalidConfigError(f"{name} must be within [-1, 1]")
        if self.ema_alpha is not None and not 0.0 <= self.ema_alpha <= 1.0:
            raise InvalidConfigError("ema_alpha must be within [0, 1]")
        return self

    # --- assembled pieces -------------------------------------------------

    def profiles(self) -> tuple[LatencyProfile, ...]:
        return (
            LatencyProfile(Backbone.RESNET18, self.pps_resnet18),
            LatencyProfile(Backbone.RESNET34, self.pps_resnet34),
            LatencyProfile(Backbone.RESNET50, self.pps_resnet50),
        )

    def thresholds(self) -> BackboneThresholds:
        if self.th1 is not None and self.th2 is not None:
            return BackboneThresholds(
                th1=self.th1,
                th2=self.th2,
                target_fps=self.target_fps,
                profiles=self.profiles(),
            )
        return derive_thresholds(self.profiles(), self.target_fps)

    def noise(self) -> NoiseModel:
        return NoiseModel(
            sigma=self.sigma,
            seed=self.seed,
            orientation_flip_prob=self.orientation_flip_prob,
        )

    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            tau_container=self.tau_container,
            tau_table=self.tau_table,
            confirm_matches=self.confirm_matches,
            delete_misses=self.delete_misses,
            optimal_assignment=self.assignment == "optimal",
            ema_alpha=self.ema_alpha,
        )

    def scenario_skeleton(self) -> Scenario:
        return Scenario(
            n_identities=self.n_identities,
            n_frames=self.n_frames,
            d=self.d,
            seed=self.seed,
            sigma=self.sigma,
            orientation_flip_prob=self.orientation_flip_prob,
            miss_rate=self.miss_rate,
            clutter_rate=self.clutter_rate,
            mean_concurrency=self.mean_concurrency,
            peak_concurrency=self.peak_concurrency,
            visit_min=self.visit_min,
            visit_max=self.visit_max,
            orientation_switch_prob=self.orientation_switch_prob,
            frame_size=(self.frame_width, self.frame_height),
        )


_FIELD_TYPES = {f.name: f for f in fields(RunConfig)}
_OPTIONAL_INT = {"th1", "th2", "capacity"}
_OPTIONAL_FLOAT = {"ema_alpha"}
_STRINGS = {"assignment", "gallery_init"}


def _parse_value(key: str, raw: str):
    if key in _STRINGS:
        return raw
    if raw.lower() in ("none", "null", "-"):
        if key in _OPTIONAL_INT or key in _OPTIONAL_FLOAT:
            return None
        raise InvalidConfigError(f"key {key!r} does not accept none")
    default = _FIELD_TYPES[key].default
    if key in _OPTIONAL_INT or isinstance(default, bool) or isinstance(default, int):
        try:
            return int(raw)
        except ValueError as exc:
            raise InvalidConfigError(f"key {key!r} expects an integer, got {raw!r}") from exc
    try:
        return float(raw)
    except ValueError as exc:
        raise InvalidConfigError(f"key {key!r} expects a number, got {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into an override mapping."""
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise InvalidConfigError(f"config line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELD_TYPES:
            raise InvalidConfigError(f"config line {lineno}: unknown key {key!r}")
        overrides[key] = _parse_value(key, raw)
    return overrides


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Build a config from defaults, an optional file, and overrides."""
    values: dict = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    if overrides:
        for key in overrides:
            if key not in _FIELD_TYPES:
                raise InvalidConfigError(f"unknown config key {key!r}")
        values.update(overrides)
    return RunConfig(**values).validate()


def config_to_dict(config: RunConfig) -> dict:
    return {f.name: getattr(config, f.name) for f in fields(RunConfig)}


def config_from_dict(values: dict) -> RunConfig:
    unknown = set(values) - set(_FIELD_TYPES)
    if unknown:
        raise InvalidConfigError(f"unknown config keys {sorted(unknown)}")
    return RunConfig(**values).validate()
