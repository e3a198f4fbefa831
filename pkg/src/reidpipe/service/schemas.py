"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field


class ConfigModel(BaseModel):
    """Partial run configuration; unset fields fall back to defaults."""

    model_config = ConfigDict(extra="forbid")

    d: Optional[int] = None
    seed: Optional[int] = None
    target_fps: Optional[float] = None
    pps_resnet18: Optional[float] = None
    pps_resnet34: Optional[float] = None
    pps_resnet50: Optional[float] = None
    th1: Optional[int] = None
    th2: Optional[int] = None
    tau_container: Optional[float] = None
    tau_table: Optional[float] = None
    window: Optional[int] = None
    confirm_matches: Optional[int] = None
    delete_misses: Optional[int] = None
    assignment: Optional[str] = None
    ema_alpha: Optional[float] = None
    capacity: Optional[int] = None
    gallery_init: Optional[str] = None
    n_identities: Optional[int] = None
    n_frames: Optional[int] = None
    sigma: Optional[float] = None
    orientation_flip_prob: Optional[float] = None
    miss_rate: Optional[float] = None
    clutter_rate: Optional[float] = None
    mean_concurrency: Optional[float] = None
    peak_concurrency: Optional[int] = None
    visit_min: Optional[int] = None
    visit_max: Optional[int] = None
    orientation_switch_prob: Optional[float] = None
    frame_width: Optional[float] = None
    frame_height: Optional[float] = None

    def overrides(self) -> dict[str, Any]:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class HealthResponse(BaseModel):
    status: str
    version: str


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ConfigModel = Field(default_factory=ConfigModel)


class SimulateResponse(BaseModel):
    scenario: dict
    summary: dict


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ConfigModel = Field(default_factory=ConfigModel)
    scenario: Optional[dict] = None
    stream: Optional[str] = None  # line-delimited detection stream text
    include_snapshot: bool = False


class RunResponse(BaseModel):
    report: dict
    snapshot: Optional[str] = None


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ConfigModel = Field(default_factory=ConfigModel)
    ids: Optional[list[int]] = None


class SweepResponse(BaseModel):
    sweep: dict


class BenchRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ConfigModel = Field(default_factory=ConfigModel)
    frames: int = 200
    dets_per_frame: int = 30
    table_ids: int = 500


class BenchResponse(BaseModel):
    report: dict


class RenderRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    report: dict


class RenderResponse(BaseModel):
    text: str


class SessionCreateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ConfigModel = Field(default_factory=ConfigModel)


class SessionInfo(BaseModel):
    session_id: str
    frames: int
    last_frame: Optional[int]
    open_tracks: int
    gallery_size: int
    next_person_id: int
    confirmations: int
    deletions: int


class SessionListResponse(BaseModel):
    sessions: list[str]


class DetectionModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    det: int
    bbox: tuple[float, float, float, float]
    gt_id: Optional[int] = None
    embedding: Optional[list[float]] = None
    scores: Optional[tuple[float, float, float]] = None
    orientation: Optional[int] = None


class FramePushRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    frame: int
    detections: list[DetectionModel] = Field(default_factory=list)


class ConfirmationModel(BaseModel):
    label: int
    person_id: int
    was_new_id: bool
    orientation: int


class FrameResultResponse(BaseModel):
    frame: int
    n_detections: int
    backbone: str
    simulated_elapsed: float
    pairs: list[tuple[int, int]]  # (det index, track label)
    spawned: list[tuple[int, int]]  # (det index, new track label)
    unmatched_detections: list[int]
    confirmations: list[ConfirmationModel]
    deletions: list[int]


class SnapshotResponse(BaseModel):
    snapshot: str


class SnapshotRestoreRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    snapshot: str


class ErrorBody(BaseModel):
    kind: str
    message: str
    line: Optional[int] = None
