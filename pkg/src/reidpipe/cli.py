"""Command-line client for the pipeline service.

Commands: ``simulate``, ``run``, ``sweep``, ``bench``, ``report``, plus
``serve`` to host the HTTP service.  Every command except ``serve`` talks
to the service API: in-process by default, or to a remote server via
``--server http://host:port``.  File reading and writing stays on the
client side; requests carry the file contents.

Exit codes: 0 success, 1 usage error, 2 input parse error, 3 runtime
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .config import parse_config_text
from .errors import ParseError, PipelineError, UsageError
from .formats import read_snapshot_text, write_snapshot_binary

DEFAULT_SWEEP_IDS = [100, 200, 300, 400, 500]


class ServiceClient:
    """Minimal JSON-over-HTTP client; in-process unless a URL is given."""

    def __init__(self, server: Optional[str] = None):
        if server is None:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)
                from starlette.testclient import TestClient

                from .service import create_app

                client = TestClient(create_app(), raise_server_exceptions=False)
            self._client = client
            self._base = ""
        else:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
            self._base = server

    def call(self, method: str, path: str, payload: Optional[dict] = None) -> dict:
        try:
            response = self._client.request(method, path, json=payload)
        except Exception as exc:
            raise PipelineError(f"service request failed: {exc}") from exc
        if response.status_code >= 400:
            raise self._to_error(response)
        return response.json()

    @staticmethod
    def _to_error(response) -> PipelineError:
        try:
            body = response.json()
        except ValueError:
            return PipelineError(f"service error {response.status_code}: {response.text[:200]}")
        if "error" in body:
            err = body["error"]
            kind, message = err.get("kind", "runtime"), err.get("message", "service error")
            if kind == "usage":
                return UsageError(message)
            if kind == "parse":
                return ParseError(message, line=err.get("line"))
            return PipelineError(message)
        if "detail" in body:  # request-model validation
            return ParseError(json.dumps(body["detail"]))
        return PipelineError(f"service error {response.status_code}")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise PipelineError(f"cannot write {path}: {exc}") from exc


def _write_bytes(path: str, blob: bytes) -> None:
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise PipelineError(f"cannot write {path}: {exc}") from exc


def _parse_ids(raw: Optional[str]) -> Optional[list[int]]:
    if raw is None:
        return None
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"--ids expects integers, got {raw!r}") from exc


def _config_payload(args) -> dict:
    """Merge config file and flag overrides into one request payload."""
    values: dict = {}
    if args.config:
        values.update(parse_config_text(_read_text(args.config)))
    if args.seed is not None:
        values["seed"] = args.seed
    if getattr(args, "tau_c", None) is not None:
        values["tau_container"] = args.tau_c
    if getattr(args, "tau_t", None) is not None:
        values["tau_table"] = args.tau_t
    if getattr(args, "fps", None) is not None:
        values["target_fps"] = args.fps
    return values


def _single_ids(args, values: dict) -> None:
    ids = _parse_ids(getattr(args, "ids", None))
    if ids is None:
        return
    if len(ids) != 1:
        raise UsageError("--ids takes a single count here")
    values["n_identities"] = ids[0]


def _dump_json(doc: dict, indent: int = 1, sort: bool = False) -> str:
    return json.dumps(doc, indent=indent, sort_keys=sort) + "\n"


def cmd_simulate(client: ServiceClient, args) -> int:
    values = _config_payload(args)
    _single_ids(args, values)
    data = client.call("POST", "/simulate", {"config": values})
    _write_text(args.output, _dump_json(data["scenario"]))
    sys.stdout.write(f"scenario written to {args.output}\n")
    for key, value in data["summary"].items():
        sys.stdout.write(f"  {key} {value}\n")
    return 0


def cmd_run(client: ServiceClient, args) -> int:
    values = _config_payload(args)
    _single_ids(args, values)
    text = _read_text(args.input)
    payload: dict = {"config": values, "include_snapshot": bool(args.snapshot)}
    doc = _try_json(text)
    if isinstance(doc, dict) and doc.get("format") == "scenario":
        payload["scenario"] = doc
    else:
        payload["stream"] = text
    data = client.call("POST", "/run", payload)
    if args.output:
        _write_text(args.output, _dump_json(data["report"], sort=True))
    if args.snapshot:
        _write_snapshot(args.snapshot, data["snapshot"])
    rendered = client.call("POST", "/render", {"report": data["report"]})
    sys.stdout.write(rendered["text"])
    return 0


def cmd_sweep(client: ServiceClient, args) -> int:
    values = _config_payload(args)
    ids = _parse_ids(args.ids) or DEFAULT_SWEEP_IDS
    data = client.call("POST", "/sweep", {"config": values, "ids": ids})
    if args.output:
        _write_text(args.output, _dump_json(data["sweep"], sort=True))
    rendered = client.call("POST", "/render", {"report": data["sweep"]})
    sys.stdout.write(rendered["text"])
    return 0


def cmd_bench(client: ServiceClient, args) -> int:
    values = _config_payload(args)
    payload = {
        "config": values,
        "frames": args.frames,
        "dets_per_frame": args.dets_per_frame,
        "table_ids": args.table_ids,
    }
    data = client.call("POST", "/bench", payload)
    if args.output:
        _write_text(args.output, _dump_json(data["report"], sort=True))
    rendered = client.call("POST", "/render", {"report": data["report"]})
    sys.stdout.write(rendered["text"])
    return 0


def cmd_report(client: ServiceClient, args) -> int:
    doc = _load_doc(args.input)
    rendered = client.call("POST", "/render", {"report": doc})
    if args.output:
        _write_text(args.output, rendered["text"])
    sys.stdout.write(rendered["text"])
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def _try_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return None


def _load_doc(path: str) -> dict:
    doc = _try_json(_read_text(path))
    if not isinstance(doc, dict):
        raise ParseError(f"{path} is not a JSON report")
    return doc


def _write_snapshot(path: str, text: str) -> None:
    if path.endswith(".bin"):
        d, next_id, capacity, slots = read_snapshot_text(text)
        _write_bytes(path, write_snapshot_binary(d, next_id, capacity, slots))
    else:
        _write_text(path, text)


def build_parser() -> _Parser:
    parser = _Parser(prog="reidpipe", description=__doc__.splitlines()[0])
    parser.add_argument("--server", help="remote service URL (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser, tau: bool = True):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="override the run seed")
        if tau:
            p.add_argument("--tau-c", type=float, dest="tau_c", help="tracklet match threshold")
            p.add_argument("--tau-t", type=float, dest="tau_t", help="gallery match threshold")
        p.add_argument("--fps", type=float, help="target frames per second")

    p = sub.add_parser("simulate", help="generate a ground-truthed scenario file")
    common(p)
    p.add_argument("--ids", help="number of identities")
    p.add_argument("--output", required=True, help="scenario file to write")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="run the pipeline over a scenario or detection stream")
    common(p)
    p.add_argument("--input", required=True, help="scenario file or detection stream")
    p.add_argument("--ids", help="identities registered when seeding the gallery")
    p.add_argument("--output", help="write the JSON run report here")
    p.add_argument("--snapshot", help="write the final gallery snapshot here (.bin for binary)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run once per identity count and tabulate IR")
    common(p)
    p.add_argument("--ids", help="comma-separated identity counts (default 100..500)")
    p.add_argument("--output", help="write the JSON sweep grid here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="wall-clock the matching path")
    common(p)
    p.add_argument("--frames", type=int, default=200, help="timed frames")
    p.add_argument("--dets-per-frame", type=int, default=30, dest="dets_per_frame")
    p.add_argument("--table-ids", type=int, default=500, dest="table_ids")
    p.add_argument("--output", help="write the JSON bench report here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="render a JSON report as text")
    p.add_argument("--input", required=True, help="report or sweep JSON file")
    p.add_argument("--output", help="write the rendered text here")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="host the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.func is cmd_serve:
            return cmd_serve(args)
        client = ServiceClient(args.server)
        return args.func(client, args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except ParseError as exc:
        where = f" (line {exc.line})" if exc.line is not None else ""
        sys.stderr.write(f"parse error{where}: {exc}\n")
        return 2
    except PipelineError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
