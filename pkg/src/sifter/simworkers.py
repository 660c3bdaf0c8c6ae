"""Synthetic workers for end-to-end runs and agreement-dynamics studies.

A worker profile mixes a uniform draw with a top-quality draw over a latent
ground-truth quality map: with probability ``quality_bias`` each pick takes
the best remaining video, otherwise a uniform random one. The latent map is
test-fixture ground truth only and is never visible to the pipeline.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConflictError, StateError, ValidationError
from .evaluation import StageTiming, sifter_time
from .pipeline import (
    PHASE_FINALIZED,
    PHASE_R3_RUNNING,
    STAGE_AGREEMENT,
    STAGE_SELECTION,
    CompilationJob,
    CompilationOutput,
    Event,
    Job,
    load_job_config,
)

_MAX_STEPS = 1_000_000


@dataclass(frozen=True)
class WorkerProfile:
    """Behavior knobs for one synthetic worker."""

    worker_id: str
    quality_bias: float = 0.5
    dwell_mean_s: float = 20.0
    dwell_jitter_s: float = 5.0
    selection_rate: float = 0.1

    def __post_init__(self):
        if not self.worker_id:
            raise ValidationError("worker_id must be non-empty")
        if not 0.0 <= self.quality_bias <= 1.0:
            raise ValidationError("quality_bias must be in [0, 1]")
        if self.dwell_mean_s <= 0 or self.dwell_jitter_s < 0:
            raise ValidationError("dwell parameters must be positive")
        if not 0.0 < self.selection_rate <= 1.0:
            raise ValidationError("selection_rate must be in (0, 1]")


def load_profiles(source: str | Path | Sequence[dict]) -> list[WorkerProfile]:
    if isinstance(source, (str, Path)):
        with Path(source).open("r", encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = list(source)
    if isinstance(data, dict):
        data = data.get("workers", [])
    profiles = [WorkerProfile(**record) for record in data]
    ids = [p.worker_id for p in profiles]
    if len(set(ids)) != len(ids):
        raise ValidationError("worker ids in profiles must be unique")
    return profiles


def generate_latent_quality(video_ids: Iterable[str], seed: int) -> dict[str, float]:
    """Fixture ground truth: one uniform quality score per video."""
    rng = random.Random(f"{seed}:latent")
    return {video_id: rng.random() for video_id in sorted(video_ids)}


def mixture_select(
    pool: Sequence[str],
    latent: Mapping[str, float],
    quality_bias: float,
    count: int,
    rng: random.Random,
) -> list[str]:
    """Draw ``count`` videos mixing a top-quality draw with a uniform draw.

    Each pick comes uniformly from the not-yet-chosen top ``count`` videos
    by latent quality with probability ``quality_bias``, and uniformly from
    everything remaining otherwise. quality_bias 0 is a uniform sample;
    1 is exactly the top videos (ties broken by id).
    """
    ranked = sorted(pool, key=lambda v: (-latent[v], v))
    count = min(count, len(ranked))
    top = ranked[:count]
    rest = ranked[count:]
    chosen: list[str] = []
    for _ in range(count):
        from_top = top and (not rest or rng.random() < quality_bias)
        if from_top:
            chosen.append(top.pop(rng.randrange(len(top))))
        else:
            pick = rng.randrange(len(top) + len(rest))
            if pick < len(top):
                chosen.append(top.pop(pick))
            else:
                chosen.append(rest.pop(pick - len(top)))
    return chosen


class _SessionDriver:
    """Plays one worker's pages against the job engine on a simulated clock."""

    def __init__(self, job: Job, profile: WorkerProfile, latent: Mapping[str, float],
                 seed: int, grace: float, poll_interval: float = 5.0):
        self.job = job
        self.profile = profile
        self.latent = latent
        self.rng = random.Random(f"{seed}:worker:{profile.worker_id}")
        self.grace = grace
        self.poll = poll_interval
        self.stage: str | None = None
        self.planned: set[str] = set()
        self.planned_over = 0
        self.open_page: dict | None = None
        self.done = False
        self.first_action: float | None = None
        self.last_action: float | None = None

    def _join(self, now: float) -> bool:
        state = self.job.state
        if state.slot_for_worker(self.profile.worker_id) is not None:
            return True
        if self.stage == STAGE_AGREEMENT and state.phase not in (
            PHASE_R3_RUNNING, PHASE_FINALIZED
        ):
            return False
        try:
            binding = self.job.join_worker(self.profile.worker_id, now)
        except (ConflictError, StateError):
            return False
        self.stage = binding["stage"]
        return True

    def _target(self, slot) -> int:
        params = self.job.state.params
        if slot.stage == STAGE_SELECTION:
            by_rate = max(1, round(self.profile.selection_rate * len(slot.videos)))
            return min(slot.select_cap, by_rate)
        return min(params.r3_min_select, len(slot.videos))

    def _replan(self) -> None:
        """Extend the planned selection set when the queue has grown."""
        slot = self.job.state.slot_for_worker(self.profile.worker_id)
        if slot is None or len(slot.videos) <= self.planned_over:
            return
        target = self._target(slot)
        already = set(slot.selected) | self.planned
        missing = max(0, target - len(already))
        pool = [v for v in slot.videos if v not in already]
        if missing and pool:
            self.planned.update(
                mixture_select(pool, self.latent, self.profile.quality_bias, missing, self.rng)
            )
        self.planned_over = len(slot.videos)

    def _dwell(self) -> float:
        limit = self.job.state.params.page_time_limit
        dwell = self.profile.dwell_mean_s + self.rng.uniform(
            -self.profile.dwell_jitter_s, self.profile.dwell_jitter_s
        )
        return min(max(dwell, 0.5), max(0.5, limit - 0.5))

    def step(self, now: float) -> float | None:
        """Perform one action; return the time of the next one, or None when done."""
        if self.open_page is not None:
            page = self.open_page
            self.open_page = None
            chosen = [v for v in page["videos"] if v in self.planned]
            self.job.submit_page(
                self.profile.worker_id, page["page_id"], chosen, at=now, grace=self.grace
            )
            self.last_action = now
            return now
        if not self._join(now):
            if self.job.state.phase == PHASE_FINALIZED:
                self.done = True
                return None
            return now + self.poll
        self._replan()
        page = self.job.issue_page(self.profile.worker_id, now)
        if page is None:
            if self._more_work_possible():
                return now + self.poll
            self.done = True
            return None
        if self.first_action is None:
            self.first_action = now
        self.open_page = page
        return now + self._dwell()

    def _more_work_possible(self) -> bool:
        state = self.job.state
        if self.stage == STAGE_SELECTION:
            return False
        if state.phase == PHASE_FINALIZED:
            return False
        return not state.r2_complete or bool(state.r3_pending)


@dataclass
class SimulationResult:
    """Outcome of one seeded end-to-end run."""

    job: Job
    output: CompilationOutput | None
    events: list[Event]
    timing: StageTiming
    overlap_fraction: float | None
    finalized: bool

    @property
    def output_size(self) -> int:
        return len(self.output.videos) if self.output else 0

    @property
    def under_supplied(self) -> bool:
        return bool(self.output and self.output.under_supplied)

    @property
    def pipeline_minutes(self) -> float | None:
        try:
            return sifter_time(self.timing)
        except ValidationError:
            return None


def _timing_from_events(job: Job) -> StageTiming:
    """Wall-clock minutes per worker and stage, read off the audit log."""
    first: dict[str, float] = {}
    last: dict[str, float] = {}
    stages: dict[str, str] = {}
    for event in job.events:
        if event.kind in ("page_issued", "page_submitted") and event.worker:
            first.setdefault(event.worker, event.at)
            last[event.worker] = event.at
            stages[event.worker] = event.payload["stage"]
    timing = StageTiming(job_id=job.job.job_id)
    for worker, start in first.items():
        minutes = (last[worker] - start) / 60.0
        if stages[worker] == STAGE_SELECTION:
            timing.selection[worker] = minutes
        else:
            timing.agreement[worker] = minutes
    return timing


def _overlap_fraction(job: Job) -> float | None:
    slots = [s for s in job.state.r3_slots if s.selected]
    if len(slots) < 2:
        return None
    fractions = []
    for i in range(len(slots)):
        for j in range(i + 1, len(slots)):
            a, b = set(slots[i].selected), set(slots[j].selected)
            denom = (len(a) + len(b)) / 2.0
            fractions.append(len(a & b) / denom if denom else 0.0)
    return sum(fractions) / len(fractions)


def run_end_to_end(
    config: dict | str | Path | CompilationJob,
    profiles: Sequence[WorkerProfile],
    latent: Mapping[str, float] | None = None,
    seed: int = 0,
    *,
    r1_kept: Sequence[str] | None = None,
    grace: float = 5.0,
) -> SimulationResult:
    """Drive a full job with synthetic workers; deterministic for a given seed.

    The job's shuffles and every worker's draws derive from ``seed``, so two
    runs with identical inputs produce byte-identical event logs. ``r1_kept``
    supplies the prefilter output (the automated stage is deterministic, so
    callers typically compute it once and reuse it across trials).
    """
    if isinstance(config, CompilationJob):
        job_spec = config
    else:
        job_spec = load_job_config(config)["job"]
    job_spec = replace(job_spec, params=replace(job_spec.params, random_seed=seed))
    if r1_kept is None:
        raise ValidationError("run_end_to_end requires the prefilter output (r1_kept)")
    kept_ids = list(r1_kept)
    if latent is None:
        latent = generate_latent_quality(kept_ids, seed)
    missing = [v for v in kept_ids if v not in latent]
    if missing:
        raise ValidationError(f"latent quality missing for {len(missing)} videos")

    job = Job(job_spec, created_at=0.0)
    job.record_r1(kept_ids, at=0.0)
    needed = len(job.state.r2_slots) + job_spec.params.r3_workers
    if len(profiles) < needed:
        raise ValidationError(
            f"need at least {needed} worker profiles, got {len(profiles)}"
        )
    selection_profiles = list(profiles[: len(job.state.r2_slots)])
    agreement_profiles = list(profiles[len(job.state.r2_slots) : needed])
    for profile in profiles[:needed]:
        if profile.dwell_mean_s > job_spec.params.page_time_limit:
            raise ValidationError(
                f"profile {profile.worker_id}: dwell mean exceeds the page time limit"
            )

    drivers = [
        _SessionDriver(job, p, latent, seed, grace) for p in selection_profiles
    ]
    for profile in agreement_profiles:
        driver = _SessionDriver(job, profile, latent, seed, grace)
        driver.stage = STAGE_AGREEMENT
        drivers.append(driver)

    heap: list[tuple[float, int, _SessionDriver]] = []
    for tie, driver in enumerate(drivers):
        heapq.heappush(heap, (0.0, tie, driver))
    tie = len(drivers)
    steps = 0
    while heap:
        steps += 1
        if steps > _MAX_STEPS:
            raise RuntimeError("simulation did not converge")
        now, _, driver = heapq.heappop(heap)
        next_at = driver.step(now)
        if next_at is not None:
            heapq.heappush(heap, (next_at, tie, driver))
            tie += 1

    output = None
    if job.state.phase == PHASE_FINALIZED:
        output = CompilationOutput(
            job_id=job.job.job_id,
            videos=tuple(job.state.output["videos"]),
            consent_counts=dict(job.state.output["consent_counts"]),
            under_supplied=job.state.output["under_supplied"],
        )
    return SimulationResult(
        job=job,
        output=output,
        events=list(job.events),
        timing=_timing_from_events(job),
        overlap_fraction=_overlap_fraction(job),
        finalized=job.state.phase == PHASE_FINALIZED,
    )


def simulate_session(
    job: Job,
    profile: WorkerProfile,
    latent: Mapping[str, float],
    seed: int,
    *,
    start_at: float = 0.0,
    grace: float = 5.0,
) -> list[Event]:
    """Play one worker's session to completion; returns the events it appended."""
    driver = _SessionDriver(job, profile, latent, seed, grace)
    start_index = len(job.events)
    now = start_at
    steps = 0
    while True:
        steps += 1
        if steps > _MAX_STEPS:
            raise RuntimeError("session simulation did not converge")
        next_at = driver.step(now)
        if next_at is None:
            break
        now = next_at
    return job.events[start_index:]


# -- agreement calibration -----------------------------------------------------

def pairwise_overlap_trials(
    quality_bias: float,
    trials: int,
    seed: int,
    n_pool: int = 100,
    n_select: int = 30,
) -> list[int]:
    """Overlap sizes between two independent workers selecting from a shared pool."""
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    pool = [f"v{i:04d}" for i in range(n_pool)]
    overlaps = []
    for trial in range(trials):
        latent = generate_latent_quality(pool, seed=seed * 100003 + trial)
        rng_a = random.Random(f"{seed}:{trial}:a")
        rng_b = random.Random(f"{seed}:{trial}:b")
        a = set(mixture_select(pool, latent, quality_bias, n_select, rng_a))
        b = set(mixture_select(pool, latent, quality_bias, n_select, rng_b))
        overlaps.append(len(a & b))
    return overlaps


def sweep_quality_bias(
    qs: Sequence[float],
    trials: int = 300,
    seed: int = 7,
    n_pool: int = 100,
    n_select: int = 30,
) -> list[dict]:
    """Mean overlap fraction for each candidate quality bias."""
    rows = []
    for q in qs:
        overlaps = pairwise_overlap_trials(q, trials, seed, n_pool, n_select)
        mean = sum(overlaps) / len(overlaps)
        rows.append({
            "quality_bias": q,
            "mean_overlap": mean,
            "overlap_fraction": mean / n_select,
        })
    return rows


def calibrate_quality_bias(
    band: tuple[float, float] = (0.40, 0.50),
    qs: Sequence[float] | None = None,
    trials: int = 300,
    seed: int = 7,
    n_pool: int = 100,
    n_select: int = 30,
) -> dict | None:
    """Find a quality bias whose two-worker overlap fraction lands in the band.

    Returns the sweep row closest to the band center, or None when the grid
    misses the band entirely.
    """
    if qs is None:
        qs = [round(0.05 * i, 2) for i in range(21)]
    rows = sweep_quality_bias(qs, trials=trials, seed=seed, n_pool=n_pool, n_select=n_select)
    center = (band[0] + band[1]) / 2.0
    in_band = [r for r in rows if band[0] <= r["overlap_fraction"] <= band[1]]
    if not in_band:
        return None
    return min(in_band, key=lambda r: abs(r["overlap_fraction"] - center))
