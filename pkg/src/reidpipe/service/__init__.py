"""HTTP service wrapping the pipeline: batch endpoints for simulate / run /
sweep / bench plus stateful per-session frame streaming."""

from .app import create_app

__all__ = ["create_app"]
