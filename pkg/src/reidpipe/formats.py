"""File formats: detection streams, scenarios, gallery snapshots, reports.

* Detection stream: line-delimited JSON, one frame per line:
  ``{"frame": 0, "detections": [{"det": 0, "bbox": [x, y, w, h],
  "gt_id": 3, "embedding": [...], "scores": [a, b, c],
  "orientation": 0}, ...]}``.  ``gt_id``, ``embedding``, ``scores`` and
  ``orientation`` are optional; a detection without an embedding but with
  ``gt_id`` and ``orientation`` replays through the synthetic provider.
* Scenario: one JSON document (``"format": "scenario"``) holding the
  generation parameters and the ground-truth visit tracks; replay is a pure
  function of it.
* Gallery snapshot: text form (canonical) and binary form.  Both store the
  feature dimension, the next person id, the capacity and every occupied
  (person, orientation) slot.  Floats are written as shortest round-trip
  decimals (text) or little-endian float64 (binary), so export/import is
  bit-exact.
* Run report / sweep: JSON with a deterministic ``results`` section, plus
  plain-text renderings.  Only bench reports carry a wall-clock ``timing``
  section; everything else is byte-stable across runs.

All JSON floats use Python's shortest-repr encoding and parse back to the
identical float64 value.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .errors import ParseError
from .simulator import Scenario, Visit
from .types import CropRef, DetectionEvent, EmbeddingRecord, Orientation

SNAPSHOT_TEXT_HEADER = "reidpipe-gallery"
SNAPSHOT_MAGIC = b"RPGAL\x00"
SNAPSHOT_VERSION = 1
SCENARIO_VERSION = 1
REPORT_VERSION = 1

FrameEvents = tuple[int, list[DetectionEvent]]


# --- detection streams ----------------------------------------------------


def _detection_to_obj(event: DetectionEvent) -> dict:
    obj: dict = {"det": event.det_index, "bbox": [float(v) for v in event.bbox]}
    if event.gt_id is not None:
        obj["gt_id"] = int(event.gt_id)
    payload = event.payload
    if isinstance(payload, EmbeddingRecord):
        obj["embedding"] = payload.feature.tolist()
        obj["scores"] = payload.orientation_scores.tolist()
    elif isinstance(payload, CropRef) and not payload.clutter:
        obj.setdefault("gt_id", int(payload.ident))
        obj["orientation"] = int(payload.orientation)
    return obj


def write_stream(frames: Iterable[FrameEvents], out: Union[str, Path, TextIO]) -> int:
    """Write a detection stream; returns the number of frame lines."""
    own = isinstance(out, (str, Path))
    fp = open(out, "w") if own else out
    count = 0
    try:
        for frame, events in frames:
            obj = {"frame": int(frame), "detections": [_detection_to_obj(e) for e in events]}
            fp.write(json.dumps(obj, separators=(",", ":")) + "\n")
            count += 1
    finally:
        if own:
            fp.close()
    return count


def parse_detection(obj: dict, frame: int, lineno: int, expected_d: Optional[int]) -> DetectionEvent:
    if not isinstance(obj, dict):
        raise ParseError("detection entry is not an object", line=lineno)
    try:
        det = int(obj["det"])
        bbox = tuple(float(v) for v in obj["bbox"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad detection entry: {exc}", line=lineno) from exc
    if len(bbox) != 4:
        raise ParseError(f"bbox must have 4 values, got {len(bbox)}", line=lineno)
    gt_id = obj.get("gt_id")
    gt_id = int(gt_id) if gt_id is not None else None

    payload: Union[EmbeddingRecord, CropRef, None] = None
    if "embedding" in obj and obj["embedding"] is not None:
        emb = np.asarray(obj["embedding"], dtype=np.float64)
        if emb.ndim != 1:
            raise ParseError("embedding must be a flat number array", line=lineno)
        if expected_d is not None and emb.shape[0] != expected_d:
            raise ParseError(
                f"embedding has {emb.shape[0]} components, expected {expected_d}",
                line=lineno,
            )
        if "scores" in obj and obj["scores"] is not None:
            scores = np.asarray(obj["scores"], dtype=np.float64)
            if scores.shape != (3,):
                raise ParseError("scores must have exactly 3 components", line=lineno)
        else:
            code = obj.get("orientation")
            if code is None:
                raise ParseError(
                    "embedding requires either scores or an orientation code",
                    line=lineno,
                )
            scores = np.zeros(3)
            try:
                scores[int(code)] = 1.0
            except (IndexError, ValueError) as exc:
                raise ParseError(f"bad orientation code {code!r}", line=lineno) from exc
        try:
            payload = EmbeddingRecord.ingest(emb, scores)
        except Exception as exc:
            raise ParseError(f"bad embedding: {exc}", line=lineno) from exc
    elif gt_id is not None and obj.get("orientation") is not None:
        try:
            ori = Orientation(int(obj["orientation"]))
        except ValueError as exc:
            raise ParseError(f"bad orientation code {obj['orientation']!r}", line=lineno) from exc
        payload = CropRef(ident=gt_id, orientation=ori, draw_index=frame)

    try:
        return DetectionEvent(frame=frame, det_index=det, bbox=bbox, gt_id=gt_id, payload=payload)
    except ValueError as exc:
        raise ParseError(str(exc), line=lineno) from exc


def read_stream(source: Union[str, Path, TextIO], expected_d: Optional[int] = None) -> list[FrameEvents]:
    """Parse a detection stream; raises :class:`ParseError` with the line."""
    own = isinstance(source, (str, Path))
    fp = open(source) if own else source
    frames: list[FrameEvents] = []
    try:
        for lineno, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict) or "frame" not in obj:
                raise ParseError("expected an object with a 'frame' field", line=lineno)
            try:
                frame = int(obj["frame"])
            except (TypeError, ValueError) as exc:
                raise ParseError(f"bad frame index {obj['frame']!r}", line=lineno) from exc
            raw_dets = obj.get("detections", [])
            if not isinstance(raw_dets, list):
                raise ParseError("'detections' must be a list", line=lineno)
            events = [parse_detection(d, frame, lineno, expected_d) for d in raw_dets]
            seen = [e.det_index for e in events]
            if len(seen) != len(set(seen)):
                raise ParseError("duplicate det index within frame", line=lineno)
            frames.append((frame, events))
    finally:
        if own:
            fp.close()
    return frames


# --- scenarios ------------------------------------------------------------


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "format": "scenario",
        "version": SCENARIO_VERSION,
        "n_identities": scenario.n_identities,
        "n_frames": scenario.n_frames,
        "d": scenario.d,
        "seed": scenario.seed,
        "sigma": scenario.sigma,
        "orientation_flip_prob": scenario.orientation_flip_prob,
        "miss_rate": scenario.miss_rate,
        "clutter_rate": scenario.clutter_rate,
        "mean_concurrency": scenario.mean_concurrency,
        "peak_concurrency": scenario.peak_concurrency,
        "visit_min": scenario.visit_min,
        "visit_max": scenario.visit_max,
        "orientation_switch_prob": scenario.orientation_switch_prob,
        "frame_size": list(scenario.frame_size),
        "tracks": [
            {
                "ident": ident,
                "visits": [
                    {
                        "start": v.start,
                        "length": v.length,
                        "orientations": [[f, o] for f, o in v.orientations],
                        "x": v.x,
                        "y": v.y,
                        "w": v.w,
                        "h": v.h,
                        "vx": v.vx,
                        "vy": v.vy,
                    }
                    for v in visits
                ],
            }
            for ident, visits in scenario.tracks
        ],
    }


def scenario_from_dict(obj: dict) -> Scenario:
    if obj.get("format") != "scenario":
        raise ParseError("not a scenario file (missing format marker)")
    if obj.get("version") != SCENARIO_VERSION:
        raise ParseError(f"unsupported scenario version {obj.get('version')!r}")
    try:
        tracks = tuple(
            (
                int(t["ident"]),
                tuple(
                    Visit(
                        start=int(v["start"]),
                        length=int(v["length"]),
                        orientations=tuple((int(f), int(o)) for f, o in v["orientations"]),
                        x=float(v["x"]),
                        y=float(v["y"]),
                        w=float(v["w"]),
                        h=float(v["h"]),
                        vx=float(v["vx"]),
                        vy=float(v["vy"]),
                    )
                    for v in t["visits"]
                ),
            )
            for t in obj["tracks"]
        )
        return Scenario(
            n_identities=int(obj["n_identities"]),
            n_frames=int(obj["n_frames"]),
            d=int(obj["d"]),
            seed=int(obj["seed"]),
            sigma=float(obj["sigma"]),
            orientation_flip_prob=float(obj["orientation_flip_prob"]),
            miss_rate=float(obj["miss_rate"]),
            clutter_rate=float(obj["clutter_rate"]),
            mean_concurrency=float(obj["mean_concurrency"]),
            peak_concurrency=int(obj["peak_concurrency"]),
            visit_min=int(obj["visit_min"]),
            visit_max=int(obj["visit_max"]),
            orientation_switch_prob=float(obj["orientation_switch_prob"]),
            frame_size=tuple(float(v) for v in obj["frame_size"]),
            tracks=tracks,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad scenario document: {exc}") from exc


def write_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=1) + "\n")


def read_scenario(path: Union[str, Path]) -> Scenario:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    return scenario_from_dict(obj)


def sniff_scenario(path: Union[str, Path]) -> bool:
    """True when the file is a scenario document rather than a stream."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError:
        return False
    return isinstance(obj, dict) and obj.get("format") == "scenario"


# --- gallery snapshots ----------------------------------------------------

SnapshotSlots = list[tuple[int, Orientation, np.ndarray]]


def write_snapshot_text(
    d: int, next_id: int, capacity: Optional[int], slots: SnapshotSlots
) -> str:
    lines = [
        f"{SNAPSHOT_TEXT_HEADER} {SNAPSHOT_VERSION}",
        f"d {d}",
        f"next_id {next_id}",
        f"capacity {'none' if capacity is None else capacity}",
    ]
    for person_id, ori, feature in slots:
        values = " ".join(repr(float(v)) for v in feature)
        lines.append(f"slot {person_id} {int(ori)} {values}")
    return "\n".join(lines) + "\n"


def read_snapshot_text(text: str) -> tuple[int, int, Optional[int], SnapshotSlots]:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty snapshot", line=1)
    head = lines[0].split()
    if len(head) != 2 or head[0] != SNAPSHOT_TEXT_HEADER:
        raise ParseError("missing gallery snapshot header", line=1)
    if int(head[1]) != SNAPSHOT_VERSION:
        raise ParseError(f"unsupported snapshot version {head[1]}", line=1)

    def header_value(idx: int, key: str) -> str:
        if idx >= len(lines):
            raise ParseError(f"missing {key!r} header line", line=idx + 1)
        parts = lines[idx].split()
        if len(parts) != 2 or parts[0] != key:
            raise ParseError(f"expected '{key} <value>'", line=idx + 1)
        return parts[1]

    try:
        d = int(header_value(1, "d"))
        next_id = int(header_value(2, "next_id"))
        raw_cap = header_value(3, "capacity")
        capacity = None if raw_cap == "none" else int(raw_cap)
    except ValueError as exc:
        raise ParseError(f"bad header value: {exc}", line=2) from exc

    slots: SnapshotSlots = []
    for lineno, line in enumerate(lines[4:], start=5):
        if not line.strip():
            continue
        parts = line.split()
        if parts[0] != "slot" or len(parts) != 3 + d:
            raise ParseError(
                f"expected 'slot <id> <orientation> <{d} floats>'", line=lineno
            )
        try:
            person_id = int(parts[1])
            ori = Orientation(int(parts[2]))
            feature = np.array([float(v) for v in parts[3:]], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"bad slot line: {exc}", line=lineno) from exc
        slots.append((person_id, ori, feature))
    return d, next_id, capacity, slots


def write_snapshot_binary(
    d: int, next_id: int, capacity: Optional[int], slots: SnapshotSlots
) -> bytes:
    parts = [
        SNAPSHOT_MAGIC,
        struct.pack(
            "<IIQqI",
            SNAPSHOT_VERSION,
            d,
            next_id,
            -1 if capacity is None else capacity,
            len(slots),
        ),
    ]
    for person_id, ori, feature in slots:
        parts.append(struct.pack("<QB", person_id, int(ori)))
        parts.append(struct.pack(f"<{d}d", *(float(v) for v in feature)))
    return b"".join(parts)


def read_snapshot_binary(blob: bytes) -> tuple[int, int, Optional[int], SnapshotSlots]:
    if not blob.startswith(SNAPSHOT_MAGIC):
        raise ParseError("missing gallery snapshot magic bytes")
    offset = len(SNAPSHOT_MAGIC)
    try:
        version, d, next_id, capacity, n_slots = struct.unpack_from("<IIQqI", blob, offset)
        offset += struct.calcsize("<IIQqI")
        if version != SNAPSHOT_VERSION:
            raise ParseError(f"unsupported snapshot version {version}")
        slots: SnapshotSlots = []
        for _ in range(n_slots):
            person_id, ori = struct.unpack_from("<QB", blob, offset)
            offset += struct.calcsize("<QB")
            feature = np.frombuffer(blob, dtype="<f8", count=d, offset=offset).astype(np.float64)
            offset += 8 * d
            slots.append((person_id, Orientation(ori), feature))
    except (struct.error, ValueError) as exc:
        raise ParseError(f"truncated snapshot: {exc}") from exc
    return d, next_id, None if capacity < 0 else capacity, slots


# --- reports --------------------------------------------------------------


def write_report(report: dict, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")


def read_report(path: Union[str, Path]) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(obj, dict) or "results" not in obj:
        raise ParseError("not a run report (missing results section)")
    return obj


def _fmt(value, digits=3) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def render_report(report: dict) -> str:
    res = report.get("results", {})
    timing = report.get("timing", {})
    lines = ["run report"]
    order = [
        ("frames", "frames"),
        ("detections", "detections"),
        ("confirmations", "confirmations"),
        ("deletions", "deletions"),
        ("new_ids", "new ids"),
        ("n_cor", "correct identifications"),
        ("n_all", "identity comparisons"),
        ("ir", "identification rate"),
        ("over_budget_frames", "over-budget frames"),
        ("fps_simulated", "fps (simulated extraction)"),
    ]
    for key, label in order:
        if key in res:
            lines.append(f"  {label:<28} {_fmt(res[key])}")
    for backbone, count in sorted(res.get("backbone_frames", {}).items()):
        lines.append(f"  frames on {backbone:<18} {count}")
    if timing:
        lines.append("timing (wall clock, non-deterministic)")
        for key in sorted(timing):
            lines.append(f"  {key:<28} {_fmt(timing[key], 4)}")
    return "\n".join(lines) + "\n"


def render_sweep(sweep: dict) -> str:
    header = f"{'ids':>6} {'IR':>8} {'events':>8} {'new_ids':>8} {'fps(sim)':>10}"
    lines = ["identity-count sweep", header, "-" * len(header)]
    for row in sweep.get("rows", []):
        res = row.get("results", {})
        lines.append(
            f"{row.get('ids'):>6} {_fmt(res.get('ir')):>8} {res.get('n_all', 0):>8} "
            f"{res.get('new_ids', 0):>8} {_fmt(res.get('fps_simulated'), 1):>10}"
        )
    return "\n".join(lines) + "\n"
