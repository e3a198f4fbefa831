"""Synthetic ground-truthed scenarios and their replay as detection streams.

A scenario holds per-identity visit tracks (when each person is on screen,
where, and facing which way), plus detector imperfections: a miss rate
(present person yields no detection) and a clutter rate (false detections
with one-off identities).  Generation and replay are pure functions of the
seed, so a scenario replays bit-identically as often as needed.

Concurrency mimics a busy street camera: visits of 10-100 frames, a target
mean of 16 concurrent persons and a hard peak of 30 by construction.

``oracle_ir`` is the reference identification-rate computation: a
straight-line reading of the confirmation rules driven by ground-truth
labels, matched against the ideal gallery of true anchor features.  It
shares no code with the engine and exists to validate it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

import numpy as np

from .errors import InvalidConfigError
from .providers import NoiseModel, make_anchor, synth_embedding
from .types import DEFAULT_DIM, DetectionEvent, Orientation

DEFAULT_FRAME_SIZE = (1920.0, 1080.0)


@dataclass(frozen=True)
class Visit:
    """One continuous on-screen interval of an identity."""

    start: int
    length: int
    # (frame, orientation) change points; first entry is at `start`.
    orientations: tuple[tuple[int, int], ...]
    x: float
    y: float
    w: float
    h: float
    vx: float
    vy: float

    @property
    def end(self) -> int:  # exclusive
        return self.start + self.length

    def orientation_at(self, frame: int) -> Orientation:
        current = self.orientations[0][1]
        for f, ori in self.orientations:
            if f > frame:
                break
            current = ori
        return Orientation(current)

    def bbox_at(self, frame: int) -> tuple[float, float, float, float]:
        dt = frame - self.start
        return (self.x + self.vx * dt, self.y + self.vy * dt, self.w, self.h)


@dataclass(frozen=True)
class Scenario:
    n_identities: int
    n_frames: int
    d: int = DEFAULT_DIM
    seed: int = 0
    sigma: float = 0.05
    orientation_flip_prob: float = 0.0
    miss_rate: float = 0.0
    clutter_rate: float = 0.0
    mean_concurrency: float = 16.0
    peak_concurrency: int = 30
    visit_min: int = 10
    visit_max: int = 100
    orientation_switch_prob: float = 0.02
    frame_size: tuple[float, float] = DEFAULT_FRAME_SIZE
    tracks: tuple[tuple[int, tuple[Visit, ...]], ...] = ()

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(
            sigma=self.sigma,
            seed=self.seed,
            orientation_flip_prob=self.orientation_flip_prob,
        )

    def presence(self, frame: int) -> list[tuple[int, Visit]]:
        """Identities on screen at ``frame`` (at most one visit each)."""
        out = []
        for ident, visits in self.tracks:
            for v in visits:
                if v.start <= frame < v.end:
                    out.append((ident, v))
                    break
        return out

    def concurrency(self) -> np.ndarray:
        counts = np.zeros(self.n_frames, dtype=int)
        for _, visits in self.tracks:
            for v in visits:
                counts[v.start : min(v.end, self.n_frames)] += 1
        return counts

    def presence_total(self) -> int:
        return int(self.concurrency().sum())


def _validate(cfg: Scenario) -> None:
    if cfg.n_identities < 1:
        raise InvalidConfigError("n_identities must be at least 1")
    if cfg.n_frames < 1:
        raise InvalidConfigError("n_frames must be at least 1")
    if not 0.0 <= cfg.miss_rate <= 1.0:
        raise InvalidConfigError("miss_rate must be within [0, 1]")
    if cfg.clutter_rate < 0.0:
        raise InvalidConfigError("clutter_rate must be non-negative")
    if cfg.visit_min < 1 or cfg.visit_max < cfg.visit_min:
        raise InvalidConfigError("visit bounds must satisfy 1 <= min <= max")
    if cfg.peak_concurrency < 1:
        raise InvalidConfigError("peak_concurrency must be at least 1")
    if cfg.sigma < 0:
        raise InvalidConfigError("sigma must be non-negative")


def generate_scenario(config: Scenario) -> Scenario:
    """Fill in the ground-truth visit tracks of a scenario skeleton.

    The scene starts warm (pre-filled to the target mean) and arrivals then
    balance departures, so the per-frame person count stays near
    ``mean_concurrency`` and never exceeds ``peak_concurrency``.
    """
    _validate(config)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([config.seed, 100])))
    width, height = config.frame_size
    mean_visit = 0.5 * (config.visit_min + config.visit_max)
    arrival_rate = min(config.mean_concurrency, config.n_identities) / mean_visit

    visits: dict[int, list[Visit]] = {i: [] for i in range(config.n_identities)}
    active_until: dict[int, int] = {}

    def start_visit(ident: int, frame: int) -> None:
        length = int(rng.integers(config.visit_min, config.visit_max + 1))
        length = min(length, config.n_frames - frame)
        ori = int(rng.integers(3))
        changes = [(frame, ori)]
        for f in range(frame + 1, frame + length):
            if rng.random() < config.orientation_switch_prob:
                ori = (ori + 1 + int(rng.integers(2))) % 3
                changes.append((f, ori))
        w = float(rng.uniform(40.0, 80.0))
        h = float(rng.uniform(100.0, 200.0))
        visits[ident].append(
            Visit(
                start=frame,
                length=length,
                orientations=tuple(changes),
                x=float(rng.uniform(0.0, max(1.0, width - w))),
                y=float(rng.uniform(0.0, max(1.0, height - h))),
                w=w,
                h=h,
                vx=float(rng.uniform(-3.0, 3.0)),
                vy=float(rng.uniform(-3.0, 3.0)),
            )
        )
        active_until[ident] = frame + length

    # Warm start: fill the scene to the target mean at frame 0.
    initial = min(
        int(round(min(config.mean_concurrency, config.n_identities))),
        config.peak_concurrency,
        config.n_identities,
    )
    for ident in range(initial):
        start_visit(ident, 0)

    for frame in range(config.n_frames):
        for ident in [i for i, end in active_until.items() if end <= frame]:
            del active_until[ident]
        if frame == 0:
            continue
        arrivals = rng.poisson(arrival_rate)
        for _ in range(int(arrivals)):
            if len(active_until) >= config.peak_concurrency:
                break
            idle = [i for i in range(config.n_identities) if i not in active_until]
            if not idle:
                break
            start_visit(idle[int(rng.integers(len(idle)))], frame)

    tracks = tuple(
        (ident, tuple(vs)) for ident, vs in visits.items() if vs
    )
    return replace(config, tracks=tracks)


def replay(scenario: Scenario) -> Iterator[tuple[int, list[DetectionEvent]]]:
    """Yield per-frame detection events with synthesized embeddings.

    A pure function of the scenario: misses and clutter re-derive from the
    seed every time, so two replays are bit-identical.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([scenario.seed, 200])))
    noise = scenario.noise
    width, height = scenario.frame_size
    clutter_count = 0
    for frame in range(scenario.n_frames):
        events: list[DetectionEvent] = []
        det = 0
        for ident, visit in sorted(scenario.presence(frame)):
            if scenario.miss_rate > 0.0 and rng.random() < scenario.miss_rate:
                continue
            ori = visit.orientation_at(frame)
            record = synth_embedding(
                make_anchor(scenario.seed, ident, scenario.d),
                ori,
                noise,
                draw_index=frame,
            )
            events.append(
                DetectionEvent(
                    frame=frame,
                    det_index=det,
                    bbox=visit.bbox_at(frame),
                    gt_id=ident,
                    payload=record,
                )
            )
            det += 1
        n_clutter = int(rng.poisson(scenario.clutter_rate)) if scenario.clutter_rate > 0 else 0
        for _ in range(n_clutter):
            ori = Orientation(int(rng.integers(3)))
            record = synth_embedding(
                make_anchor(scenario.seed, clutter_count, scenario.d, clutter=True),
                ori,
                noise,
                draw_index=frame,
                clutter=True,
            )
            w = float(rng.uniform(30.0, 90.0))
            h = float(rng.uniform(80.0, 220.0))
            events.append(
                DetectionEvent(
                    frame=frame,
                    det_index=det,
                    bbox=(
                        float(rng.uniform(0.0, max(1.0, width - w))),
                        float(rng.uniform(0.0, max(1.0, height - h))),
                        w,
                        h,
                    ),
                    gt_id=None,
                    payload=record,
                )
            )
            det += 1
            clutter_count += 1
        yield frame, events


def ideal_anchor_matrix(scenario: Scenario) -> np.ndarray:
    """True anchors of every identity, shape (n_identities, 3, d)."""
    rows = [
        make_anchor(scenario.seed, ident, scenario.d).anchors
        for ident in range(scenario.n_identities)
    ]
    return np.stack(rows)


def oracle_ir(
    scenario: Scenario,
    tau_table: float,
    confirm_matches: int = 4,
    delete_misses: int = 2,
) -> tuple[float, int]:
    """Reference identification rate and the number of confirmation events.

    Straight-line restatement of the confirmation rules, driven by
    ground-truth labels instead of similarity: each identity's detections
    open a candidate window (the opening detection is match #1), a present
    detection is a match, anything else is a miss; the 4th match confirms
    and queries the ideal anchor gallery under the reported orientation,
    the 2nd miss abandons.  A confirmation is correct when the
    nearest-neighbor identity is the true one and reaches ``tau_table``.
    """
    anchors = ideal_anchor_matrix(scenario)  # (n, 3, d)
    open_windows: dict[int, dict] = {}
    n_cor = 0
    n_all = 0
    for frame, events in replay(scenario):
        present = {e.gt_id: e.payload for e in events if e.gt_id is not None}
        for ident in list(open_windows):
            window = open_windows[ident]
            if ident in present:
                record = present.pop(ident)
                window["matches"] += 1
                window["feature"] = record.feature
                window["orientation"] = record.orientation
                if window["matches"] >= confirm_matches:
                    sims = anchors[:, int(window["orientation"]), :] @ window["feature"]
                    best = int(np.argmax(sims))
                    n_all += 1
                    if best == ident and sims[best] >= tau_table:
                        n_cor += 1
                    del open_windows[ident]
            else:
                window["misses"] += 1
                if window["misses"] >= delete_misses:
                    del open_windows[ident]
        for ident, record in present.items():
            open_windows[ident] = {
                "matches": 1,
                "misses": 0,
                "feature": record.feature,
                "orientation": record.orientation,
            }
    if n_all == 0:
        return 1.0, 0
    return n_cor / n_all, n_all
