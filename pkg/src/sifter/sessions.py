"""Worker sessions: timed task pages over a job's assignment queues.

A session is one worker's pass through a stage. Pages hold up to eight
videos with a server-stamped deadline; the deadline is enforced server-side
with a small grace for network slack, so late submissions consume the page
without recording selections.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Callable

from .errors import ConflictError, NotFoundError, StateError
from .pipeline import PHASE_CREATED, PHASE_FINALIZED, STAGE_SELECTION
from .registry import JobEntry, JobRegistry

SESSION_ACTIVE = "active"
SESSION_COMPLETED = "completed"
SESSION_EXPIRED = "expired"


@dataclass
class WorkerSession:
    """One worker's pass through a stage of one job."""

    session_id: str
    worker_id: str
    job_id: str
    stage: str
    created_at: float
    status: str = SESSION_ACTIVE
    acks: dict[str, dict] = field(default_factory=dict)
    client_timings: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "worker_id": self.worker_id,
            "job_id": self.job_id,
            "stage": self.stage,
            "status": self.status,
        }


def _instructions(theme: str, stage: str, target: int) -> str:
    goal = f"at least {target}" if stage != STAGE_SELECTION else f"up to {target}"
    theme_part = f' for the compilation "{theme}"' if theme else ""
    return (
        f"Quickly select {goal} videos{theme_part}. Pick videos that are "
        "eye-catching and clearly fit the theme; you do not need to catch "
        "every good video. Hover a tile for sound, click to select."
    )


class SessionManager:
    """Issues sessions and task pages against the jobs in a registry."""

    def __init__(
        self,
        registry: JobRegistry,
        clock: Callable[[], float] | None = None,
        grace: float = 5.0,
    ):
        self.registry = registry
        self.clock = clock if clock is not None else registry.clock or time.time
        self.grace = grace
        self.sessions: dict[str, WorkerSession] = {}
        self._lock = threading.Lock()
        self._counter = 0

    def _entry(self, job_id: str) -> JobEntry:
        return self.registry.get(job_id)

    def get(self, session_id: str) -> WorkerSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"unknown session: {session_id}")
        return session

    def _active_session(self, job_id: str, worker_id: str) -> WorkerSession | None:
        for session in self.sessions.values():
            if (
                session.job_id == job_id
                and session.worker_id == worker_id
                and session.status == SESSION_ACTIVE
            ):
                return session
        return None

    def create_session(self, worker_id: str, job_id: str) -> dict:
        """Create (or return the active) session and its landing-page payload."""
        if not worker_id:
            raise ConflictError("worker_id must be non-empty")
        entry = self._entry(job_id)
        job = entry.job
        if job.state.phase == PHASE_CREATED:
            raise StateError(f"job {job_id} has not finished its automated prefilter")
        if job.state.phase == PHASE_FINALIZED:
            raise StateError(f"job {job_id} is finalized")
        with self._lock:
            existing = self._active_session(job_id, worker_id)
            binding = job.join_worker(worker_id, self.clock())
            slot = job.state.slot_for_worker(worker_id)
            if (
                existing is None
                and binding["stage"] == STAGE_SELECTION
                and slot is not None
                and slot.complete
                and job.state.phase != PHASE_CREATED
                and job.state.r3_slots
            ):
                # A finished selection worker has nothing left here, and the
                # agreement stage must be staffed by different workers.
                raise ConflictError(
                    f"worker {worker_id} served in the selection stage of this job"
                )
            if existing is not None:
                session = existing
            else:
                self._counter += 1
                session = WorkerSession(
                    session_id=f"s{self._counter}",
                    worker_id=worker_id,
                    job_id=job_id,
                    stage=binding["stage"],
                    created_at=self.clock(),
                )
                self.sessions[session.session_id] = session
        return {
            **session.to_dict(),
            "assigned": binding["assigned"],
            "target": binding["target"],
            "instructions": _instructions(job.state.theme, binding["stage"], binding["target"]),
            "example_refs": list(job.state.example_refs),
        }

    def next_page(self, session_id: str) -> dict:
        """Issue the next page, or a completion marker when the queue is done."""
        session = self.get(session_id)
        if session.status != SESSION_ACTIVE:
            return {"done": True, "session": session.to_dict()}
        entry = self._entry(session.job_id)
        job = entry.job
        slot = job.state.slot_for_worker(session.worker_id)
        if slot is not None and slot.open_page is not None:
            page = slot.open_page
            exc = ConflictError("a page is already open for this session")
            exc.details = {"page_id": page["page_id"], "deadline": page["deadline"]}
            raise exc
        page = job.issue_page(session.worker_id, self.clock())
        if page is None:
            session.status = SESSION_COMPLETED
            return {"done": True, "session": session.to_dict()}
        return {
            "done": False,
            "session_id": session.session_id,
            "page_id": page["page_id"],
            "videos": self._video_descriptors(entry, page["videos"]),
            "needed_remaining": page["needed_remaining"],
            "pool_remaining": page["pool_remaining"],
            "selected_so_far": page["selected_so_far"],
            "issued_at": page["issued_at"],
            "deadline": page["deadline"],
            "page_seconds": job.state.params.page_time_limit,
        }

    def _video_descriptors(self, entry: JobEntry, video_ids: list[str]) -> list[dict]:
        descriptors = []
        for video_id in video_ids:
            asset = entry.manifest.get(video_id) if entry.manifest else None
            descriptors.append(
                {
                    "id": video_id,
                    "media": asset.frames if asset else video_id,
                    "duration_s": asset.duration_s if asset else None,
                }
            )
        return descriptors

    def submit_page(
        self,
        session_id: str,
        page_id: str,
        selected: list[str],
        client_timings: dict | None = None,
    ) -> dict:
        """Forward a page submission; resubmitting a closed page returns the same ack."""
        session = self.get(session_id)
        if page_id in session.acks:
            return session.acks[page_id]
        job = self._entry(session.job_id).job
        ack = job.submit_page(
            session.worker_id, page_id, selected, at=self.clock(), grace=self.grace
        )
        session.acks[page_id] = ack
        if client_timings:
            session.client_timings[page_id] = client_timings
        return ack

    def job_status(self, job_id: str) -> dict:
        return self._entry(job_id).job.progress()
