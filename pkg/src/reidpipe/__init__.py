"""Real-time person search: adaptive extraction, tracklet confirmation,
per-orientation identity gallery, synthetic scenario evaluation."""

from .config import RunConfig, load_config
from .gallery import IdentityGallery
from .matcher import Assignment, Confirmation, Engine, EngineConfig, FrameReport
from .metrics import IdentityScorer, RunStats, detection_rates, identification_rate
from .pipeline import RunOutcome, bench, run_scenario, run_stream, seed_gallery, sweep
from .providers import (
    IdentityAnchor,
    NoiseModel,
    PassthroughProvider,
    SyntheticProvider,
    make_anchor,
    synth_embedding,
)
from .scheduler import BackboneThresholds, capacity, derive_thresholds, select_backbone
from .simulator import Scenario, Visit, generate_scenario, oracle_ir, replay
from .tracks import Track, TrackState
from .types import (
    Backbone,
    CropRef,
    DetectionEvent,
    EmbeddingRecord,
    LatencyProfile,
    Orientation,
    normalize,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "Backbone",
    "BackboneThresholds",
    "Confirmation",
    "CropRef",
    "DetectionEvent",
    "EmbeddingRecord",
    "Engine",
    "EngineConfig",
    "FrameReport",
    "IdentityAnchor",
    "IdentityGallery",
    "IdentityScorer",
    "LatencyProfile",
    "NoiseModel",
    "Orientation",
    "PassthroughProvider",
    "RunConfig",
    "RunOutcome",
    "RunStats",
    "Scenario",
    "SyntheticProvider",
    "Track",
    "TrackState",
    "Visit",
    "bench",
    "capacity",
    "derive_thresholds",
    "detection_rates",
    "generate_scenario",
    "identification_rate",
    "load_config",
    "make_anchor",
    "normalize",
    "oracle_ir",
    "replay",
    "run_scenario",
    "run_stream",
    "seed_gallery",
    "select_backbone",
    "sweep",
    "synth_embedding",
    "__version__",
]
