from __future__ import annotations

import io
from collections import Counter
from dataclasses import replace

import numpy as np

from reidpipe.config import RunConfig
from reidpipe.formats import read_stream, write_stream
from reidpipe.gallery import IdentityGallery
from reidpipe.pipeline import _majority_gt, bench, run_scenario, run_stream, seed_gallery, sweep
from reidpipe.providers import make_anchor
from reidpipe.simulator import generate_scenario, replay
from reidpipe.types import DetectionEvent, EmbeddingRecord, Orientation

SMALL = RunConfig(d=16, n_identities=12, n_frames=150, sigma=0.0, seed=0)


def test_seed_gallery_registers_every_identity() -> None:
    gallery = IdentityGallery(d=16)
    registry = seed_gallery(gallery, seed=0, n_identities=5, d=16)
    assert registry == {i: i for i in range(5)}
    assert len(gallery) == 5
    for ident in range(5):
        anchors = make_anchor(0, ident, 16).anchors
        for ori in Orientation:
            assert np.array_equal(gallery.get(ident, ori), anchors[int(ori)])


def test_majority_vote_prefers_real_identities_and_low_ids() -> None:
    assert _majority_gt(Counter({3: 2, 5: 1})) == 3
    assert _majority_gt(Counter({None: 2, 5: 2})) == 5
    assert _majority_gt(Counter({4: 2, 2: 2})) == 2
    assert _majority_gt(Counter({None: 3})) is None
    assert _majority_gt(Counter()) is None


def test_zero_noise_run_identifies_perfectly() -> None:
    outcome = run_scenario(SMALL)
    results = outcome.report["results"]
    assert results["ir"] == 1.0
    assert results["n_cor"] == results["n_all"] > 0
    assert results["new_ids"] == 0
    assert results["frames"] == 150
    assert results["detections"] > 0
    assert sum(results["backbone_frames"].values()) == 150
    assert outcome.report["format"] == "run-report"


def test_runs_are_deterministic() -> None:
    a = run_scenario(SMALL)
    b = run_scenario(SMALL)
    assert a.report == b.report
    c = run_scenario(replace(SMALL, seed=1))
    assert c.report["results"]["confirmation_digest"] != a.report["results"]["confirmation_digest"]


def test_supplied_scenario_parameters_override_the_config() -> None:
    scenario = generate_scenario(replace(SMALL, n_identities=7).scenario_skeleton())
    outcome = run_scenario(replace(SMALL, n_identities=99), scenario=scenario)
    assert outcome.report["config"]["n_identities"] == 7
    assert outcome.registry is not None
    assert len(outcome.registry) == 7


def test_empty_gallery_mode_scores_online_consistency() -> None:
    outcome = run_scenario(replace(SMALL, gallery_init="empty"))
    results = outcome.report["results"]
    assert outcome.registry is None
    assert results["new_ids"] > 0
    assert results["ir"] == 1.0


def test_frame_reports_are_kept_on_request() -> None:
    outcome = run_scenario(SMALL, keep_reports=True)
    assert len(outcome.frame_reports) == 150
    assert outcome.frame_reports[0].frame == 0
    assert run_scenario(SMALL).frame_reports == []


def test_stream_replay_reproduces_the_scenario_run() -> None:
    scenario = generate_scenario(SMALL.scenario_skeleton())
    from_scenario = run_scenario(SMALL, scenario=scenario)

    buf = io.StringIO()
    write_stream(replay(scenario), buf)
    frames = read_stream(io.StringIO(buf.getvalue()), expected_d=SMALL.d)
    from_stream = run_stream(SMALL, frames)

    assert from_stream.report["results"] == from_scenario.report["results"]


def test_over_budget_frames_are_counted() -> None:
    # 30 detections on the shallowest backbone take 30/709.321 s, above
    # the 25 fps frame budget of 0.04 s.
    record = EmbeddingRecord.ingest(np.arange(1.0, 17.0), np.array([1.0, 0.0, 0.0]))
    frames = []
    for f in range(3):
        events = [
            DetectionEvent(frame=f, det_index=i, bbox=(1.0 * i, 0.0, 5.0, 9.0), payload=record)
            for i in range(30)
        ]
        frames.append((f, events))
    outcome = run_stream(replace(SMALL, gallery_init="empty"), frames)
    results = outcome.report["results"]
    assert results["over_budget_frames"] == 3
    assert results["backbone_frames"] == {"resnet18": 3}
    assert results["fps_simulated"] < 25.0


def test_sweep_grid_structure() -> None:
    doc = sweep(replace(SMALL, n_frames=80), [5, 10])
    assert doc["format"] == "sweep"
    assert doc["ids"] == [5, 10]
    assert [row["ids"] for row in doc["rows"]] == [5, 10]
    single = run_scenario(replace(SMALL, n_frames=80, n_identities=5))
    assert doc["rows"][0]["results"] == single.report["results"]


def test_bench_exercises_the_matching_path() -> None:
    report = bench(RunConfig(d=64, sigma=0.02), n_frames=30, dets_per_frame=8, table_ids=40, warmup=5)
    assert report["format"] == "bench-report"
    assert report["results"]["frames"] == 30
    assert report["results"]["dets_per_frame"] == 8
    assert report["results"]["table_ids"] == 40
    assert report["results"]["confirmations"] > 0
    timing = report["timing"]
    assert 0 < timing["p50_ms"] <= timing["max_ms"]
    assert timing["p50_ms"] <= timing["p95_ms"]
    assert timing["fps_matching"] > 0
