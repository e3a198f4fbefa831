"""End-to-end drivers: scenario runs, stream runs, sweeps and benchmarks.

A run wires together a feature provider, the backbone scheduler, the
tracklet engine and the identity gallery, feeds it frames, and folds the
per-frame reports into a deterministic results document.  Ground truth,
when present, is tallied per tracklet so each confirmation can be judged
by the identity that actually fed the tracklet (majority vote).

Reports produced here contain no wall-clock values; running the same
inputs twice yields byte-identical documents.  Bench reports are the
one exception and carry a separate ``timing`` section.
"""

from __future__ import annotations

import hashlib
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import RunConfig, config_to_dict
from .formats import REPORT_VERSION, FrameEvents
from .gallery import IdentityGallery
from .matcher import Engine, FrameReport
from .metrics import IdentityScorer, RunStats
from .providers import NoiseModel, PassthroughProvider, SyntheticProvider, make_anchor, synth_embedding
from .simulator import Scenario, generate_scenario, replay
from .types import DetectionEvent, Orientation

BENCH_DETS_PER_FRAME = 30
BENCH_TABLE_IDS = 500


def seed_gallery(gallery: IdentityGallery, seed: int, n_identities: int, d: int) -> dict[int, int]:
    """Pre-register every identity's anchors; returns gt id -> person id."""
    registry: dict[int, int] = {}
    for ident in range(n_identities):
        anchors = make_anchor(seed, ident, d).anchors
        person_id = gallery.add_identity(anchors[0], Orientation.FRONT)
        gallery.update(person_id, Orientation.BACK, anchors[1])
        gallery.update(person_id, Orientation.SIDE, anchors[2])
        registry[ident] = person_id
    return registry


def _majority_gt(votes: Counter) -> Optional[int]:
    # Highest count wins; real identities beat clutter on ties, then lowest id.
    ranked = sorted(votes.items(), key=lambda kv: (-kv[1], kv[0] is None, kv[0] or 0))
    return ranked[0][0] if ranked else None


@dataclass
class RunOutcome:
    """Everything a caller may want back from one run."""

    report: dict
    stats: RunStats
    scorer: IdentityScorer
    gallery: IdentityGallery
    registry: Optional[dict[int, int]]
    scenario: Optional[Scenario] = None
    frame_reports: list[FrameReport] = field(default_factory=list)


def _drive(
    engine: Engine,
    frames: Iterable[FrameEvents],
    config: RunConfig,
    scorer: IdentityScorer,
    keep_reports: bool,
) -> tuple[RunStats, str, list[FrameReport]]:
    stats = RunStats()
    digest = hashlib.sha256()
    frame_budget = 1.0 / config.target_fps
    gt_votes: dict[int, Counter] = {}
    kept: list[FrameReport] = []

    for frame, events in frames:
        gt_of = {e.det_index: e.gt_id for e in events}
        report = engine.process_frame(frame, events)

        for det_index, label in report.spawned:
            gt_votes[label] = Counter([gt_of[det_index]])
        for det_index, label in report.assignment.pairs:
            if label in gt_votes:
                gt_votes[label][gt_of[det_index]] += 1

        for conf in report.confirmations:
            gt_id = _majority_gt(gt_votes.pop(conf.label, Counter()))
            scorer.score(gt_id, conf.orientation, conf.person_id, conf.was_new_id)
            stats.confirmations += 1
            if conf.was_new_id:
                stats.new_ids += 1
            digest.update(
                f"{report.frame}:{conf.label}:{conf.person_id}:"
                f"{int(conf.was_new_id)}:{int(conf.orientation)}:{gt_id}\n".encode()
            )
        for label in report.deletions:
            gt_votes.pop(label, None)
            stats.deletions += 1

        stats.frames += 1
        stats.detections += report.n_detections
        stats.backbone_frames[report.backbone.label] += 1
        stats.extract_times.append(report.simulated_elapsed)
        if report.simulated_elapsed > frame_budget:
            stats.over_budget_frames += 1
        if keep_reports:
            kept.append(report)

    stats.n_cor = scorer.n_cor
    stats.n_all = scorer.n_all
    return stats, digest.hexdigest(), kept


def _results_section(stats: RunStats, digest: str) -> dict:
    sim_seconds = float(sum(stats.extract_times))
    return {
        "frames": stats.frames,
        "detections": stats.detections,
        "confirmations": stats.confirmations,
        "deletions": stats.deletions,
        "new_ids": stats.new_ids,
        "n_cor": stats.n_cor,
        "n_all": stats.n_all,
        "ir": stats.ir,
        "over_budget_frames": stats.over_budget_frames,
        "backbone_frames": dict(sorted(stats.backbone_frames.items())),
        "sim_seconds": sim_seconds,
        "fps_simulated": stats.frames / sim_seconds if sim_seconds > 0 else None,
        "confirmation_digest": digest,
    }


def _merge_scenario(config: RunConfig, scenario: Scenario) -> RunConfig:
    """Fold scenario parameters back into the config recorded in reports."""
    return replace(
        config,
        d=scenario.d,
        seed=scenario.seed,
        n_identities=scenario.n_identities,
        n_frames=scenario.n_frames,
        sigma=scenario.sigma,
        orientation_flip_prob=scenario.orientation_flip_prob,
        miss_rate=scenario.miss_rate,
        clutter_rate=scenario.clutter_rate,
        mean_concurrency=scenario.mean_concurrency,
        peak_concurrency=scenario.peak_concurrency,
        visit_min=scenario.visit_min,
        visit_max=scenario.visit_max,
        orientation_switch_prob=scenario.orientation_switch_prob,
        frame_width=scenario.frame_size[0],
        frame_height=scenario.frame_size[1],
    )


def run_scenario(
    config: RunConfig,
    scenario: Optional[Scenario] = None,
    keep_reports: bool = False,
) -> RunOutcome:
    """Generate (or accept) a scenario, replay it through the engine, score it."""
    config = config.validate()
    if scenario is None:
        scenario = generate_scenario(config.scenario_skeleton())
    else:
        config = _merge_scenario(config, scenario).validate()

    provider = SyntheticProvider(d=scenario.d, noise=scenario.noise, profiles=config.profiles())
    gallery = IdentityGallery(d=scenario.d, capacity=config.capacity)
    registry = None
    if config.gallery_init == "anchors":
        registry = seed_gallery(gallery, scenario.seed, scenario.n_identities, scenario.d)
    scorer = IdentityScorer(registry)
    engine = Engine(provider, config.thresholds(), gallery, config.engine_config())

    stats, digest, kept = _drive(engine, replay(scenario), config, scorer, keep_reports)
    report = {
        "format": "run-report",
        "version": REPORT_VERSION,
        "config": config_to_dict(config),
        "results": _results_section(stats, digest),
    }
    return RunOutcome(
        report=report,
        stats=stats,
        scorer=scorer,
        gallery=gallery,
        registry=registry,
        scenario=scenario,
        frame_reports=kept,
    )


def run_stream(
    config: RunConfig,
    frames: Sequence[FrameEvents],
    keep_reports: bool = False,
) -> RunOutcome:
    """Run a pre-recorded detection stream through the engine.

    Detections carrying embeddings pass straight through; detections with
    only (gt_id, orientation) are synthesized from the config's seed and
    noise model.  Scoring uses the gallery-seeding registry when
    ``gallery_init`` is ``anchors`` (gt ids must then fall in
    ``range(n_identities)``), otherwise the online consistency judge.
    """
    config = config.validate()
    provider = SyntheticProvider(d=config.d, noise=config.noise(), profiles=config.profiles())
    gallery = IdentityGallery(d=config.d, capacity=config.capacity)
    registry = None
    if config.gallery_init == "anchors":
        registry = seed_gallery(gallery, config.seed, config.n_identities, config.d)
    scorer = IdentityScorer(registry)
    engine = Engine(provider, config.thresholds(), gallery, config.engine_config())

    stats, digest, kept = _drive(engine, frames, config, scorer, keep_reports)
    report = {
        "format": "run-report",
        "version": REPORT_VERSION,
        "config": config_to_dict(config),
        "results": _results_section(stats, digest),
    }
    return RunOutcome(
        report=report,
        stats=stats,
        scorer=scorer,
        gallery=gallery,
        registry=registry,
        frame_reports=kept,
    )


def sweep(config: RunConfig, id_counts: Sequence[int]) -> dict:
    """Run one scenario per identity count; returns the grid document."""
    config = config.validate()
    rows = []
    for n in id_counts:
        outcome = run_scenario(replace(config, n_identities=int(n)))
        rows.append({"ids": int(n), "results": outcome.report["results"]})
    return {
        "format": "sweep",
        "version": REPORT_VERSION,
        "config": config_to_dict(config),
        "ids": [int(n) for n in id_counts],
        "rows": rows,
    }


def _bench_frames(
    config: RunConfig,
    n_frames: int,
    dets_per_frame: int,
    table_ids: int,
    cohort_frames: int = 25,
) -> list[FrameEvents]:
    """Pre-synthesized frames: a rotating cohort of identities, all present
    every frame, so tracklets keep confirming and exercising gallery scans."""
    noise = NoiseModel(sigma=config.sigma, seed=config.seed)
    anchors = {i: make_anchor(config.seed, i, config.d) for i in range(table_ids)}
    frames: list[FrameEvents] = []
    for f in range(n_frames):
        base = (f // cohort_frames) * dets_per_frame
        events = []
        for k in range(dets_per_frame):
            ident = (base + k) % table_ids
            ori = Orientation((ident + f // 8) % 3)
            record = synth_embedding(anchors[ident], ori, noise, draw_index=f)
            events.append(
                DetectionEvent(
                    frame=f,
                    det_index=k,
                    bbox=(10.0 * k, 5.0, 40.0, 90.0),
                    gt_id=ident,
                    payload=record,
                )
            )
        frames.append((f, events))
    return frames


def bench(
    config: RunConfig,
    n_frames: int = 200,
    dets_per_frame: int = BENCH_DETS_PER_FRAME,
    table_ids: int = BENCH_TABLE_IDS,
    warmup: int = 20,
) -> dict:
    """Wall-clock the matching path against a pre-seeded gallery.

    Embeddings are synthesized up front; each timed iteration covers
    association, confirmation bookkeeping and gallery scans only.
    """
    config = config.validate()
    frames = _bench_frames(config, warmup + n_frames, dets_per_frame, table_ids)
    provider = PassthroughProvider(d=config.d, profiles=config.profiles())
    gallery = IdentityGallery(d=config.d)
    seed_gallery(gallery, config.seed, table_ids, config.d)
    engine = Engine(provider, config.thresholds(), gallery, config.engine_config())

    durations = []
    confirmations = 0
    for frame, events in frames:
        t0 = time.perf_counter()
        report = engine.process_frame(frame, events)
        durations.append(time.perf_counter() - t0)
        confirmations += len(report.confirmations)
    timed = np.array(durations[warmup:])

    return {
        "format": "bench-report",
        "version": REPORT_VERSION,
        "results": {
            "frames": n_frames,
            "dets_per_frame": dets_per_frame,
            "table_ids": table_ids,
            "d": config.d,
            "confirmations": confirmations,
        },
        "timing": {
            "p50_ms": float(np.percentile(timed, 50) * 1e3),
            "p95_ms": float(np.percentile(timed, 95) * 1e3),
            "mean_ms": float(timed.mean() * 1e3),
            "max_ms": float(timed.max() * 1e3),
            "fps_matching": float(1.0 / np.percentile(timed, 50)),
        },
    }
