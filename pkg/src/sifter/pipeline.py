"""Event-sourced orchestration of a compilation job.

A job moves through phases: created -> r1_done -> r2_running (selection)
-> r3_running (agreement) -> finalized. Every mutation is an appended
event; the in-memory state is a pure fold over the event log, so replaying
a log reproduces the exact state and output. Selections stream from the
selection stage into the agreement pool; agreement batches trigger at a
pool threshold or when selection completes, whichever comes first.
"""

from __future__ import annotations

import json
import math
import random
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import (
    CapExceededError,
    ConflictError,
    NotFoundError,
    OutOfScopeError,
    StateError,
    ValidationError,
)

PHASE_CREATED = "created"
PHASE_R1_DONE = "r1_done"
PHASE_R2_RUNNING = "r2_running"
PHASE_R3_RUNNING = "r3_running"
PHASE_FINALIZED = "finalized"
PHASES = (PHASE_CREATED, PHASE_R1_DONE, PHASE_R2_RUNNING, PHASE_R3_RUNNING, PHASE_FINALIZED)

STAGE_SELECTION = "selection"
STAGE_AGREEMENT = "agreement"

EVENT_KINDS = (
    "job_created",
    "r1_done",
    "r2_assigned",
    "selection",
    "page_issued",
    "page_submitted",
    "r3_triggered",
    "r3_selection",
    "finalized",
)

# Selection-stage cap is also limited to this fraction of the assignment.
SELECT_FRACTION = 0.1


@dataclass(frozen=True)
class Event:
    """One entry of the per-job append-only audit log."""

    seq: int
    at: float
    kind: str
    worker: str | None = None
    video: str | None = None
    payload: dict | None = None

    def to_dict(self) -> dict:
        data: dict = {"seq": self.seq, "at": self.at, "kind": self.kind}
        if self.worker is not None:
            data["worker"] = self.worker
        if self.video is not None:
            data["video"] = self.video
        if self.payload is not None:
            data["payload"] = self.payload
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Event":
        if data.get("kind") not in EVENT_KINDS:
            raise ValidationError(f"unknown event kind: {data.get('kind')!r}")
        return cls(
            seq=int(data["seq"]),
            at=float(data["at"]),
            kind=data["kind"],
            worker=data.get("worker"),
            video=data.get("video"),
            payload=data.get("payload"),
        )


@dataclass(frozen=True)
class PipelineParams:
    """Stage sizing and timing knobs for one compilation job."""

    r2_pool_per_worker: int = 1000
    r2_select_cap: int = 100
    r3_trigger_threshold: int = 100
    r3_min_select: int = 30
    r3_workers: int = 2
    final_min: int = 10
    final_max: int = 20
    page_size: int = 8
    page_time_limit: float = 30.0
    random_seed: int = 1

    def __post_init__(self):
        for name in ("r2_pool_per_worker", "r2_select_cap", "r3_trigger_threshold",
                     "r3_min_select", "r3_workers", "final_min", "final_max", "page_size"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        if self.page_time_limit <= 0:
            raise ValidationError("page_time_limit must be positive")
        if self.final_min > self.final_max:
            raise ValidationError("final_min must be <= final_max")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineParams":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown pipeline params: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True)
class CompilationJob:
    """A themed curation request."""

    job_id: str
    theme: str
    keywords: tuple[str, ...]
    params: PipelineParams = field(default_factory=PipelineParams)
    example_refs: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.job_id:
            raise ValidationError("job_id must be non-empty")
        if not self.keywords:
            raise ValidationError("job keywords must be non-empty")

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "theme": self.theme,
            "keywords": list(self.keywords),
            "params": self.params.to_dict(),
            "example_refs": list(self.example_refs),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CompilationJob":
        return cls(
            job_id=data["job_id"],
            theme=data.get("theme", ""),
            keywords=tuple(data["keywords"]),
            params=PipelineParams.from_dict(data.get("params", {})),
            example_refs=tuple(data.get("example_refs", ())),
        )


@dataclass(frozen=True)
class R2Plan:
    """One selection-stage assignment: a contiguous share of the shuffled pool."""

    slot: int
    videos: tuple[str, ...]
    select_cap: int


def plan_r2(r1_kept: Sequence[str], params: PipelineParams, seed: int | None = None) -> list[R2Plan]:
    """Partition the prefilter output into per-worker selection assignments.

    Worker count is ceil(n / r2_pool_per_worker); the pool is shuffled with
    the seeded generator and split into contiguous parts whose sizes differ
    by at most one. Each assignment's selection cap is the smaller of the
    configured cap and 10% of the assignment (rounded up).
    """
    videos = list(r1_kept)
    if not videos:
        raise ValidationError("cannot plan selection stage over an empty pool")
    rng = random.Random(params.random_seed if seed is None else seed)
    rng.shuffle(videos)
    workers = math.ceil(len(videos) / params.r2_pool_per_worker)
    base, extra = divmod(len(videos), workers)
    plans: list[R2Plan] = []
    start = 0
    for slot in range(workers):
        size = base + (1 if slot < extra else 0)
        part = tuple(videos[start : start + size])
        start += size
        cap = min(params.r2_select_cap, math.ceil(SELECT_FRACTION * len(part)))
        plans.append(R2Plan(slot=slot, videos=part, select_cap=cap))
    return plans


@dataclass
class SlotState:
    """Mutable per-worker assignment record inside StageState."""

    stage: str
    index: int
    videos: list[str]
    select_cap: int | None = None
    worker: str | None = None
    selected: dict[str, float] = field(default_factory=dict)
    seen: set[str] = field(default_factory=set)
    open_page: dict | None = None

    @property
    def unseen(self) -> list[str]:
        return [v for v in self.videos if v not in self.seen]

    @property
    def complete(self) -> bool:
        return not self.unseen

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "index": self.index,
            "videos": list(self.videos),
            "select_cap": self.select_cap,
            "worker": self.worker,
            "selected": dict(self.selected),
            "seen": sorted(self.seen),
            "open_page": self.open_page,
        }


@dataclass
class StageState:
    """Derived snapshot of a job; mutated only by applying events."""

    job_id: str
    phase: str = PHASE_CREATED
    theme: str = ""
    keywords: list[str] = field(default_factory=list)
    example_refs: list[str] = field(default_factory=list)
    params: PipelineParams = field(default_factory=PipelineParams)
    r1_kept: list[str] = field(default_factory=list)
    r2_slots: list[SlotState] = field(default_factory=list)
    r3_slots: list[SlotState] = field(default_factory=list)
    r3_pool: list[str] = field(default_factory=list)
    r3_batched: int = 0
    r3_batch_count: int = 0
    page_counter: int = 0
    output: dict | None = None

    @property
    def r2_workers(self) -> set[str]:
        return {s.worker for s in self.r2_slots if s.worker is not None}

    @property
    def r3_workers(self) -> set[str]:
        return {s.worker for s in self.r3_slots if s.worker is not None}

    @property
    def r3_pending(self) -> list[str]:
        return self.r3_pool[self.r3_batched :]

    @property
    def r2_complete(self) -> bool:
        return bool(self.r2_slots) and all(
            s.worker is not None and s.complete for s in self.r2_slots
        )

    @property
    def r3_complete(self) -> bool:
        """Agreement work exhausted: every staffed queue seen, empty queues need no worker."""
        if not self.r3_slots:
            return False
        for slot in self.r3_slots:
            if slot.videos and slot.worker is None:
                return False
            if not slot.complete:
                return False
        return True

    def slot_for_worker(self, worker: str) -> SlotState | None:
        for slot in self.r2_slots + self.r3_slots:
            if slot.worker == worker:
                return slot
        return None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "phase": self.phase,
            "theme": self.theme,
            "keywords": list(self.keywords),
            "example_refs": list(self.example_refs),
            "params": self.params.to_dict(),
            "r1_kept": list(self.r1_kept),
            "r2_slots": [s.to_dict() for s in self.r2_slots],
            "r3_slots": [s.to_dict() for s in self.r3_slots],
            "r3_pool": list(self.r3_pool),
            "r3_batched": self.r3_batched,
            "r3_batch_count": self.r3_batch_count,
            "page_counter": self.page_counter,
            "output": self.output,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class CompilationOutput:
    """Videos with unanimous consent across the selection and agreement stages."""

    job_id: str
    videos: tuple[str, ...]
    consent_counts: dict[str, int]
    under_supplied: bool

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "videos": list(self.videos),
            "consent_counts": dict(self.consent_counts),
            "under_supplied": self.under_supplied,
        }


def _agreement_order_seed(seed: int, batch: int, slot: int) -> str:
    return f"{seed}:agreement:{batch}:{slot}"


def _apply(state: StageState, event: Event) -> None:
    """Fold one event into the state. Must stay deterministic: no clocks, no I/O."""
    kind = event.kind
    if kind == "job_created":
        job = event.payload["job"]
        state.theme = job.get("theme", "")
        state.keywords = list(job.get("keywords", []))
        state.example_refs = list(job.get("example_refs", []))
        state.params = PipelineParams.from_dict(job.get("params", {}))
        state.phase = PHASE_CREATED
    elif kind == "r1_done":
        state.r1_kept = list(event.payload["kept"])
        state.phase = PHASE_R1_DONE
        if state.r1_kept:
            plans = plan_r2(state.r1_kept, state.params)
            state.r2_slots = [
                SlotState(
                    stage=STAGE_SELECTION,
                    index=p.slot,
                    videos=list(p.videos),
                    select_cap=p.select_cap,
                )
                for p in plans
            ]
    elif kind == "r2_assigned":
        stage = event.payload["stage"]
        slot_index = event.payload["slot"]
        slots = state.r2_slots if stage == STAGE_SELECTION else state.r3_slots
        slots[slot_index].worker = event.worker
        if stage == STAGE_SELECTION and state.phase == PHASE_R1_DONE:
            state.phase = PHASE_R2_RUNNING
    elif kind == "selection":
        slot = state.slot_for_worker(event.worker)
        slot.selected[event.video] = event.at
        if event.video not in state.r3_pool:
            state.r3_pool.append(event.video)
    elif kind == "page_issued":
        payload = event.payload
        slots = state.r2_slots if payload["stage"] == STAGE_SELECTION else state.r3_slots
        slots[payload["slot"]].open_page = {
            "page_id": payload["page_id"],
            "videos": list(payload["videos"]),
            "issued_at": event.at,
            "deadline": payload["deadline"],
        }
        state.page_counter += 1
    elif kind == "page_submitted":
        payload = event.payload
        slots = state.r2_slots if payload["stage"] == STAGE_SELECTION else state.r3_slots
        slot = slots[payload["slot"]]
        if slot.open_page is not None:
            slot.seen.update(slot.open_page["videos"])
        slot.open_page = None
    elif kind == "r3_triggered":
        batch = list(event.payload["videos"])
        batch_index = event.payload["batch"]
        if not state.r3_slots:
            state.r3_slots = [
                SlotState(stage=STAGE_AGREEMENT, index=i, videos=[])
                for i in range(state.params.r3_workers)
            ]
        for slot in state.r3_slots:
            order = list(batch)
            random.Random(
                _agreement_order_seed(state.params.random_seed, batch_index, slot.index)
            ).shuffle(order)
            slot.videos.extend(order)
        state.r3_batched += len(batch)
        state.r3_batch_count += 1
        state.phase = PHASE_R3_RUNNING
    elif kind == "r3_selection":
        slot = state.slot_for_worker(event.worker)
        slot.selected[event.video] = event.at
    elif kind == "finalized":
        state.output = event.payload["output"]
        state.phase = PHASE_FINALIZED
    else:  # pragma: no cover - guarded by Event.from_dict
        raise ValidationError(f"unknown event kind: {kind}")


def replay_events(events: Iterable[Event]) -> StageState:
    """Rebuild job state by folding an event log from scratch."""
    state: StageState | None = None
    for event in events:
        if state is None:
            if event.kind != "job_created":
                raise ValidationError("event log must start with job_created")
            state = StageState(job_id=event.payload["job"]["job_id"])
        _apply(state, event)
    if state is None:
        raise ValidationError("empty event log")
    return state


def compute_agreement(state: StageState) -> CompilationOutput:
    """Videos selected by their selection-stage worker and every agreement worker.

    Output is ordered by each video's earliest agreement-stage selection
    timestamp and truncated to final_max; under_supplied flags outputs that
    fall short of final_min.
    """
    params = state.params
    if state.phase not in (PHASE_R3_RUNNING, PHASE_FINALIZED):
        raise StateError("agreement stage has not started")
    if not state.r2_complete or state.r3_pending:
        raise StateError("selection stage still streaming into the agreement pool")
    if not state.r3_complete:
        raise StateError("agreement stage not complete")
    for slot in state.r3_slots:
        required = min(params.r3_min_select, len(slot.videos))
        if len(slot.selected) < required:
            raise ValidationError(
                f"agreement worker {slot.worker or slot.index} selected "
                f"{len(slot.selected)} of at least {required} required"
            )
    consented = [
        v for v in state.r3_pool
        if all(v in slot.selected for slot in state.r3_slots)
    ]
    consented.sort(key=lambda v: (min(s.selected[v] for s in state.r3_slots), v))
    under = len(consented) < params.final_min
    videos = tuple(consented[: params.final_max])
    counts = {v: 1 + len(state.r3_slots) for v in videos}
    return CompilationOutput(
        job_id=state.job_id,
        videos=videos,
        consent_counts=counts,
        under_supplied=under,
    )


class Job:
    """Command interface over one job's event log.

    All mutations are serialized by a per-job lock and recorded as events;
    readers receive plain-dict snapshots.
    """

    def __init__(
        self,
        job: CompilationJob,
        created_at: float = 0.0,
        event_sink: Callable[[Event], None] | None = None,
        auto_finalize: bool = True,
    ):
        self.job = job
        self.events: list[Event] = []
        self._sink = event_sink
        self._auto_finalize = auto_finalize
        self._lock = threading.RLock()
        self.state = StageState(job_id=job.job_id)
        self._emit("job_created", created_at, payload={"job": job.to_dict()})

    @classmethod
    def from_events(cls, events: Sequence[Event], auto_finalize: bool = True) -> "Job":
        """Rebuild a live job from a stored event log."""
        events = list(events)
        state = replay_events(events)
        job = cls.__new__(cls)
        job.job = CompilationJob.from_dict(events[0].payload["job"])
        job.events = events
        job._sink = None
        job._auto_finalize = auto_finalize
        job._lock = threading.RLock()
        job.state = state
        return job

    # -- event plumbing ----------------------------------------------------

    def _emit(self, kind: str, at: float, worker: str | None = None,
              video: str | None = None, payload: dict | None = None) -> Event:
        event = Event(
            seq=len(self.events) + 1,
            at=at,
            kind=kind,
            worker=worker,
            video=video,
            payload=payload,
        )
        _apply(self.state, event)
        self.events.append(event)
        if self._sink is not None:
            self._sink(event)
        return event

    # -- commands ----------------------------------------------------------

    def record_r1(self, kept_ids: Sequence[str], at: float) -> None:
        """Record the prefilter output and plan the selection-stage partition."""
        with self._lock:
            if self.state.phase != PHASE_CREATED:
                raise StateError(f"prefilter already recorded (phase {self.state.phase})")
            self._emit("r1_done", at, payload={"kept": list(kept_ids)})

    def join_worker(self, worker_id: str, at: float) -> dict:
        """Bind a worker to the next open assignment; idempotent per worker.

        Selection slots fill first-come-first-served; agreement slots open
        once the first batch triggers and never admit selection-stage workers.
        """
        with self._lock:
            existing = self.state.slot_for_worker(worker_id)
            if existing is not None:
                return self._binding_info(existing)
            if self.state.phase in (PHASE_CREATED,):
                raise StateError("job is not accepting workers yet")
            if self.state.phase == PHASE_FINALIZED:
                raise StateError("job is finalized")
            for slot in self.state.r2_slots:
                if slot.worker is None:
                    self._emit(
                        "r2_assigned", at, worker=worker_id,
                        payload={"stage": STAGE_SELECTION, "slot": slot.index,
                                 "videos": list(slot.videos), "select_cap": slot.select_cap},
                    )
                    return self._binding_info(slot)
            if self.state.phase == PHASE_R3_RUNNING:
                if worker_id in self.state.r2_workers:
                    raise ConflictError(
                        f"worker {worker_id} served in the selection stage of this job"
                    )
                for slot in self.state.r3_slots:
                    if slot.worker is None:
                        self._emit(
                            "r2_assigned", at, worker=worker_id,
                            payload={"stage": STAGE_AGREEMENT, "slot": slot.index,
                                     "videos": list(slot.videos), "select_cap": None},
                        )
                        return self._binding_info(slot)
            raise ConflictError("no open assignments for this job")

    def _binding_info(self, slot: SlotState) -> dict:
        target = slot.select_cap if slot.stage == STAGE_SELECTION else min(
            self.state.params.r3_min_select, len(slot.videos)
        )
        return {
            "stage": slot.stage,
            "slot": slot.index,
            "assigned": len(slot.videos),
            "target": target,
            "worker": slot.worker,
        }

    def issue_page(self, worker_id: str, at: float) -> dict | None:
        """Issue the next page of unseen videos, or None when the queue is drained."""
        with self._lock:
            slot = self._require_slot(worker_id)
            if slot.open_page is not None:
                raise ConflictError("a page is already open for this worker")
            unseen = slot.unseen
            if not unseen:
                return None
            params = self.state.params
            videos = unseen[: params.page_size]
            page_id = f"p{self.state.page_counter + 1}"
            deadline = at + params.page_time_limit
            self._emit(
                "page_issued", at, worker=worker_id,
                payload={"page_id": page_id, "stage": slot.stage, "slot": slot.index,
                         "videos": list(videos), "deadline": deadline},
            )
            return self._page_info(slot, page_id, videos, at, deadline)

    def _page_info(self, slot: SlotState, page_id: str, videos: list[str],
                   issued_at: float, deadline: float) -> dict:
        params = self.state.params
        if slot.stage == STAGE_SELECTION:
            target = slot.select_cap
        else:
            target = min(params.r3_min_select, len(slot.videos))
        return {
            "page_id": page_id,
            "stage": slot.stage,
            "videos": list(videos),
            "issued_at": issued_at,
            "deadline": deadline,
            "needed_remaining": max(0, target - len(slot.selected)),
            "pool_remaining": len(slot.unseen) - len(videos),
            "selected_so_far": len(slot.selected),
        }

    def submit_page(self, worker_id: str, page_id: str, selected: Sequence[str],
                    at: float, grace: float = 5.0) -> dict:
        """Close an open page, recording its selections if it arrived in time.

        Late submissions (past deadline + grace) are acknowledged as expired:
        selections are discarded but the page's videos still count as seen.
        """
        with self._lock:
            slot = self._require_slot(worker_id)
            page = slot.open_page
            if page is None or page["page_id"] != page_id:
                raise NotFoundError(f"no open page {page_id} for this worker")
            page_videos = set(page["videos"])
            stray = [v for v in selected if v not in page_videos]
            if stray:
                raise OutOfScopeError(f"selection outside the issued page: {stray}")
            expired = at > page["deadline"] + grace
            accepted: list[str] = []
            rejected: dict[str, str] = {}
            if not expired:
                for video in selected:
                    try:
                        if slot.stage == STAGE_SELECTION:
                            status = self.record_r2_selection(worker_id, video, at)
                        else:
                            status = self.record_r3_selection(worker_id, video, at)
                    except (CapExceededError, OutOfScopeError) as exc:
                        rejected[video] = exc.code
                        continue
                    if status == "selected":
                        accepted.append(video)
                    else:
                        rejected[video] = status
            self._emit(
                "page_submitted", at, worker=worker_id,
                payload={"page_id": page_id, "stage": slot.stage, "slot": slot.index,
                         "expired": expired, "accepted": accepted},
            )
            self.maybe_trigger_r3(at)
            if self._auto_finalize and self.can_finalize()[0]:
                self.finalize(at)
            return {
                "page_id": page_id,
                "status": "expired" if expired else "accepted",
                "accepted": accepted,
                "rejected": rejected,
            }

    def _require_slot(self, worker_id: str) -> SlotState:
        slot = self.state.slot_for_worker(worker_id)
        if slot is None:
            raise NotFoundError(f"worker {worker_id} has no assignment on this job")
        return slot

    def record_r2_selection(self, worker_id: str, video_id: str, at: float) -> str:
        """Add a selection-stage pick and stream it into the agreement pool."""
        with self._lock:
            if self.state.phase not in (PHASE_R2_RUNNING, PHASE_R3_RUNNING):
                raise StateError(f"selection stage not running (phase {self.state.phase})")
            slot = self._require_slot(worker_id)
            if slot.stage != STAGE_SELECTION:
                raise ConflictError(f"worker {worker_id} is not a selection-stage worker")
            if video_id not in slot.videos:
                raise OutOfScopeError(f"video {video_id} is not in this worker's assignment")
            if video_id in slot.selected:
                return "already_selected"
            if len(slot.selected) >= slot.select_cap:
                raise CapExceededError(
                    f"selection cap {slot.select_cap} reached for worker {worker_id}"
                )
            self._emit("selection", at, worker=worker_id, video=video_id)
            return "selected"

    def record_r3_selection(self, worker_id: str, video_id: str, at: float) -> str:
        """Add an agreement-stage pick; agreement workers never overlap selection workers."""
        with self._lock:
            if self.state.phase != PHASE_R3_RUNNING:
                raise StateError(f"agreement stage not running (phase {self.state.phase})")
            if worker_id in self.state.r2_workers:
                raise ConflictError(
                    f"worker {worker_id} served in the selection stage of this job"
                )
            slot = self._require_slot(worker_id)
            if slot.stage != STAGE_AGREEMENT:
                raise ConflictError(f"worker {worker_id} is not an agreement-stage worker")
            if video_id not in slot.videos:
                raise OutOfScopeError(f"video {video_id} is not in this worker's batch")
            if video_id in slot.selected:
                return "already_selected"
            self._emit("r3_selection", at, worker=worker_id, video=video_id)
            return "selected"

    def maybe_trigger_r3(self, at: float) -> bool:
        """Open the next agreement batch when the pool is large enough.

        Triggers at the pool threshold, or as soon as the selection stage has
        fully completed (so small jobs never stall below the threshold).
        """
        with self._lock:
            if self.state.phase not in (PHASE_R2_RUNNING, PHASE_R3_RUNNING):
                return False
            pending = self.state.r3_pending
            threshold_hit = len(pending) >= self.state.params.r3_trigger_threshold
            completion_hit = self.state.r2_complete and (
                bool(pending) or self.state.r3_batch_count == 0
            )
            if not (threshold_hit or completion_hit):
                return False
            self._emit(
                "r3_triggered", at,
                payload={"batch": self.state.r3_batch_count, "videos": list(pending)},
            )
            return True

    def can_finalize(self) -> tuple[bool, str]:
        """Whether the unanimous-consent output can be computed now."""
        state = self.state
        if state.phase == PHASE_FINALIZED:
            return False, "already finalized"
        if state.phase != PHASE_R3_RUNNING:
            return False, "agreement stage has not started"
        if not state.r2_complete:
            return False, "selection stage still running"
        if state.r3_pending:
            return False, "agreement pool has unbatched videos"
        if not state.r3_complete:
            return False, "agreement stage not complete"
        for slot in state.r3_slots:
            required = min(state.params.r3_min_select, len(slot.videos))
            if len(slot.selected) < required:
                return False, (
                    f"agreement worker {slot.worker or slot.index} below "
                    f"minimum of {required} selections"
                )
        return True, "ready"

    def finalize(self, at: float) -> CompilationOutput:
        """Compute and record the unanimous-consent output."""
        with self._lock:
            output = compute_agreement(self.state)
            self._emit("finalized", at, payload={"output": output.to_dict()})
            return output

    # -- read side -----------------------------------------------------------

    def progress(self) -> dict:
        """Read-only per-stage snapshot: counts, workers, phase, output."""
        with self._lock:
            state = self.state

            def slot_view(slot: SlotState) -> dict:
                return {
                    "slot": slot.index,
                    "worker": slot.worker,
                    "assigned": len(slot.videos),
                    "seen": len(slot.seen),
                    "selected": len(slot.selected),
                    "select_cap": slot.select_cap,
                    "completed": slot.complete,
                }

            return {
                "job_id": state.job_id,
                "phase": state.phase,
                "theme": state.theme,
                "r1_kept": len(state.r1_kept),
                "r2": {
                    "slots": [slot_view(s) for s in state.r2_slots],
                    "selected_total": sum(len(s.selected) for s in state.r2_slots),
                    "complete": state.r2_complete,
                },
                "r3": {
                    "pool": len(state.r3_pool),
                    "pending": len(state.r3_pending),
                    "batches": state.r3_batch_count,
                    "slots": [slot_view(s) for s in state.r3_slots],
                    "complete": state.r3_complete if state.r3_slots else False,
                },
                "output": state.output,
            }


def job_progress(job: Job) -> dict:
    return job.progress()


# -- config and log files ----------------------------------------------------

def load_job_config(
    source: str | Path | dict,
    job_id: str | None = None,
    default_job_id: str = "job-1",
) -> dict:
    """Load and normalize a job config: theme, keywords, params, r1, corpus.

    Returns a dict with a CompilationJob under "job", the prefilter config
    dict under "r1", and the corpus path (resolved relative to the config
    file) under "corpus". An explicit ``job_id`` overrides the config;
    ``default_job_id`` fills in when the config has none.
    """
    base_dir: Path | None = None
    if isinstance(source, (str, Path)):
        path = Path(source)
        base_dir = path.parent
        with path.open("r", encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = dict(source)
    if "keywords" not in data or not data["keywords"]:
        raise ValidationError("job config must list keywords")
    job = CompilationJob(
        job_id=job_id or data.get("job_id") or default_job_id,
        theme=data.get("theme", ""),
        keywords=tuple(data["keywords"]),
        params=PipelineParams.from_dict(data.get("params", {})),
        example_refs=tuple(data.get("example_refs", ())),
    )
    corpus = data.get("corpus")
    if corpus is not None:
        corpus = Path(corpus)
        if base_dir is not None and not corpus.is_absolute():
            corpus = base_dir / corpus
    return {"job": job, "r1": data.get("r1", {}), "corpus": corpus}


def write_event_log(events: Iterable[Event], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")


def read_event_log(path: str | Path) -> list[Event]:
    events: list[Event] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(Event.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValidationError(f"{path}: line {lineno}: bad event: {exc}") from exc
    return events
