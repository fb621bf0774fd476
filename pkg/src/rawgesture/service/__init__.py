"""HTTP service wrapping the pipeline jobs."""

from .app import create_app

__all__ = ["create_app"]
