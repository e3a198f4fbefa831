"""FastAPI application exposing the pipeline.

Batch endpoints (``/simulate``, ``/run``, ``/sweep``, ``/bench``,
``/render``) are stateless: every request carries its configuration and
payload, every response is a complete document.  ``/sessions`` provides the
streaming form: create a session, push frames one at a time, inspect stats,
export or restore the gallery snapshot.

Failures surface as structured JSON bodies ``{"error": {kind, message,
line}}`` with the HTTP status derived from the error kind: usage errors
400, parse errors 422, unknown sessions 404, out-of-order frames 409,
anything else 500.
"""

from __future__ import annotations

import io
import uuid
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import RunConfig, load_config
from ..errors import (
    OutOfOrderFrameError,
    ParseError,
    PipelineError,
    UnknownSessionError,
)
from ..formats import (
    parse_detection,
    read_snapshot_text,
    read_stream,
    render_report,
    render_sweep,
    scenario_from_dict,
    scenario_to_dict,
    write_snapshot_text,
)
from ..gallery import IdentityGallery
from ..matcher import Engine
from ..pipeline import bench, run_scenario, run_stream, seed_gallery, sweep
from ..providers import SyntheticProvider
from ..simulator import generate_scenario
from . import schemas

_STATUS_BY_KIND = {"usage": 400, "parse": 422, "runtime": 500}


@dataclass
class Session:
    """One live engine plus its run counters."""

    session_id: str
    config: RunConfig
    engine: Engine
    frames: int = 0
    confirmations: int = 0
    deletions: int = 0

    def info(self) -> schemas.SessionInfo:
        return schemas.SessionInfo(
            session_id=self.session_id,
            frames=self.frames,
            last_frame=self.engine.last_frame,
            open_tracks=len(self.engine.tracks),
            gallery_size=len(self.engine.gallery),
            next_person_id=self.engine.gallery.next_id,
            confirmations=self.confirmations,
            deletions=self.deletions,
        )


def _build_session(config: RunConfig) -> Session:
    provider = SyntheticProvider(d=config.d, noise=config.noise(), profiles=config.profiles())
    gallery = IdentityGallery(d=config.d, capacity=config.capacity)
    if config.gallery_init == "anchors":
        seed_gallery(gallery, config.seed, config.n_identities, config.d)
    engine = Engine(provider, config.thresholds(), gallery, config.engine_config())
    return Session(session_id=uuid.uuid4().hex, config=config, engine=engine)


def _scenario_summary(scenario) -> dict:
    conc = scenario.concurrency()
    return {
        "n_identities": scenario.n_identities,
        "n_frames": scenario.n_frames,
        "d": scenario.d,
        "seed": scenario.seed,
        "visits": sum(len(v) for _, v in scenario.tracks),
        "presence_total": scenario.presence_total(),
        "mean_concurrency_observed": float(conc.mean()),
        "peak_concurrency_observed": int(conc.max()),
    }


def create_app() -> FastAPI:
    app = FastAPI(title="reidpipe", version=__version__)
    sessions: dict[str, Session] = {}

    @app.exception_handler(PipelineError)
    async def pipeline_error_handler(request: Request, exc: PipelineError):
        status = _STATUS_BY_KIND.get(exc.kind, 500)
        if isinstance(exc, UnknownSessionError):
            status = 404
        elif isinstance(exc, OutOfOrderFrameError):
            status = 409
        body = {"kind": exc.kind, "message": str(exc)}
        if isinstance(exc, ParseError) and exc.line is not None:
            body["line"] = exc.line
        return JSONResponse(status_code=status, content={"error": body})

    def get_session(session_id: str) -> Session:
        if session_id not in sessions:
            raise UnknownSessionError(f"no session {session_id!r}")
        return sessions[session_id]

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest):
        config = load_config(None, req.config.overrides())
        scenario = generate_scenario(config.scenario_skeleton())
        return schemas.SimulateResponse(
            scenario=scenario_to_dict(scenario), summary=_scenario_summary(scenario)
        )

    @app.post("/run", response_model=schemas.RunResponse)
    def run(req: schemas.RunRequest):
        config = load_config(None, req.config.overrides())
        if req.scenario is not None and req.stream is not None:
            raise ParseError("provide either a scenario or a stream, not both")
        if req.scenario is not None:
            outcome = run_scenario(config, scenario_from_dict(req.scenario))
        elif req.stream is not None:
            frames = read_stream(io.StringIO(req.stream), expected_d=config.d)
            outcome = run_stream(config, frames)
        else:
            outcome = run_scenario(config)
        snapshot = None
        if req.include_snapshot:
            gallery = outcome.gallery
            snapshot = write_snapshot_text(
                gallery.d, gallery.next_id, gallery.capacity, gallery.snapshot()
            )
        return schemas.RunResponse(report=outcome.report, snapshot=snapshot)

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def run_sweep(req: schemas.SweepRequest):
        config = load_config(None, req.config.overrides())
        ids = req.ids if req.ids else [100, 200, 300, 400, 500]
        return schemas.SweepResponse(sweep=sweep(config, ids))

    @app.post("/bench", response_model=schemas.BenchResponse)
    def run_bench(req: schemas.BenchRequest):
        config = load_config(None, req.config.overrides())
        report = bench(
            config,
            n_frames=req.frames,
            dets_per_frame=req.dets_per_frame,
            table_ids=req.table_ids,
        )
        return schemas.BenchResponse(report=report)

    @app.post("/render", response_model=schemas.RenderResponse)
    def render(req: schemas.RenderRequest):
        fmt = req.report.get("format")
        if fmt == "sweep":
            return schemas.RenderResponse(text=render_sweep(req.report))
        if fmt in ("run-report", "bench-report"):
            return schemas.RenderResponse(text=render_report(req.report))
        raise ParseError(f"unknown report format {fmt!r}")

    @app.post("/sessions", response_model=schemas.SessionInfo)
    def create_session(req: schemas.SessionCreateRequest):
        session = _build_session(load_config(None, req.config.overrides()))
        sessions[session.session_id] = session
        return session.info()

    @app.get("/sessions", response_model=schemas.SessionListResponse)
    def list_sessions():
        return schemas.SessionListResponse(sessions=sorted(sessions))

    @app.get("/sessions/{session_id}", response_model=schemas.SessionInfo)
    def session_info(session_id: str):
        return get_session(session_id).info()

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        get_session(session_id)
        del sessions[session_id]
        return {"deleted": session_id}

    @app.post("/sessions/{session_id}/frames", response_model=schemas.FrameResultResponse)
    def push_frame(session_id: str, req: schemas.FramePushRequest):
        session = get_session(session_id)
        events = []
        for i, det in enumerate(req.detections):
            obj = {k: v for k, v in det.model_dump().items() if v is not None}
            events.append(parse_detection(obj, req.frame, i + 1, session.config.d))
        report = session.engine.process_frame(req.frame, events)
        session.frames += 1
        session.confirmations += len(report.confirmations)
        session.deletions += len(report.deletions)
        return schemas.FrameResultResponse(
            frame=report.frame,
            n_detections=report.n_detections,
            backbone=report.backbone.label,
            simulated_elapsed=report.simulated_elapsed,
            pairs=list(report.assignment.pairs),
            spawned=list(report.spawned),
            unmatched_detections=list(report.assignment.unmatched_detections),
            confirmations=[
                schemas.ConfirmationModel(
                    label=c.label,
                    person_id=c.person_id,
                    was_new_id=c.was_new_id,
                    orientation=int(c.orientation),
                )
                for c in report.confirmations
            ],
            deletions=list(report.deletions),
        )

    @app.get("/sessions/{session_id}/snapshot", response_model=schemas.SnapshotResponse)
    def export_snapshot(session_id: str):
        gallery = get_session(session_id).engine.gallery
        text = write_snapshot_text(
            gallery.d, gallery.next_id, gallery.capacity, gallery.snapshot()
        )
        return schemas.SnapshotResponse(snapshot=text)

    @app.put("/sessions/{session_id}/snapshot", response_model=schemas.SessionInfo)
    def restore_snapshot(session_id: str, req: schemas.SnapshotRestoreRequest):
        session = get_session(session_id)
        d, next_id, capacity, slots = read_snapshot_text(req.snapshot)
        if d != session.config.d:
            raise ParseError(
                f"snapshot dimension {d} does not match session dimension {session.config.d}"
            )
        session.engine.gallery = IdentityGallery.restore(d, next_id, capacity, slots)
        return session.info()

    return app
