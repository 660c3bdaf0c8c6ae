"""HTTP boundary for workers and job administration.

JSON over HTTP under a versioned ``/v1/`` prefix; timestamps in payloads are
ISO-8601 UTC; domain errors map to ``{code, message}`` bodies.
"""

from __future__ import annotations

import logging
import time
from datetime import datetime, timezone
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import (
    ConflictError,
    NotFoundError,
    SifterError,
    ValidationError,
)
from .registry import JobRegistry
from .sessions import SessionManager

logger = logging.getLogger(__name__)


def _iso(epoch: float) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).isoformat()


def _status_for(exc: SifterError) -> int:
    if isinstance(exc, NotFoundError):
        return 404
    if isinstance(exc, ConflictError):
        return 409
    if isinstance(exc, ValidationError):
        return 422
    return 400


class SessionRequest(BaseModel):
    worker_id: str = Field(min_length=1)
    job_id: str = Field(min_length=1)


class PageSubmission(BaseModel):
    selected: list[str] = Field(default_factory=list)
    client_timings: dict = Field(default_factory=dict)


class RunR1Request(BaseModel):
    max_workers: int = 1


def create_app(
    registry: JobRegistry | None = None,
    *,
    clock: Callable[[], float] = time.time,
    grace: float = 5.0,
    media_base: str = "",
) -> FastAPI:
    """Build the task service over a job registry."""
    registry = registry if registry is not None else JobRegistry(clock=clock)
    manager = SessionManager(registry, clock=clock, grace=grace)
    app = FastAPI(title="sifter task service", version="1.0")
    app.state.registry = registry
    app.state.sessions = manager

    @app.exception_handler(SifterError)
    async def domain_error_handler(_: Request, exc: SifterError):
        body = {"code": exc.code, "message": str(exc)}
        details = getattr(exc, "details", None)
        if details:
            body["details"] = details
        return JSONResponse(status_code=_status_for(exc), content=body)

    def _with_media(page: dict) -> dict:
        for video in page.get("videos", ()):
            locator = video.get("media") or video["id"]
            if media_base and "://" not in str(locator):
                locator = f"{media_base.rstrip('/')}/{locator}"
            video["media"] = locator
        return page

    @app.post("/v1/jobs", status_code=201)
    def create_job(config: dict):
        entry = registry.create_job(config)
        return {
            "job_id": entry.job_id,
            "phase": entry.job.state.phase,
            "corpus": len(entry.manifest) if entry.manifest else 0,
        }

    @app.post("/v1/jobs/{job_id}/run-r1")
    def run_r1(job_id: str, body: RunR1Request | None = None):
        max_workers = body.max_workers if body else 1
        summary = registry.run_r1(job_id, max_workers=max_workers)
        logger.info("prefilter done for %s: %s", job_id, summary)
        return summary

    @app.get("/v1/jobs/{job_id}/status")
    def job_status(job_id: str):
        return manager.job_status(job_id)

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: SessionRequest):
        return manager.create_session(body.worker_id, body.job_id)

    @app.get("/v1/sessions/{session_id}/page")
    def next_page(session_id: str):
        page = manager.next_page(session_id)
        if page.get("done"):
            return page
        page = _with_media(page)
        page["issued_at"] = _iso(page["issued_at"])
        page["deadline"] = _iso(page["deadline"])
        return page

    @app.post("/v1/sessions/{session_id}/page/{page_id}")
    def submit_page(session_id: str, page_id: str, body: PageSubmission):
        return manager.submit_page(
            session_id, page_id, body.selected, client_timings=body.client_timings
        )

    return app
