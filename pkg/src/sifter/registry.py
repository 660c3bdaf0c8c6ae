"""Job registry: ties a job's engine to its corpus, prefilter config, and frames."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .corpus import CorpusManifest, FrameSequence, VideoAsset, ingest_manifest, make_frame_loader, search_by_keywords
from .errors import NotFoundError, StateError, ValidationError
from .filters import R1Config, run_r1, write_verdicts_jsonl
from .pipeline import Event, Job, load_job_config, write_event_log


@dataclass
class JobEntry:
    job: Job
    r1_config: R1Config
    manifest: CorpusManifest | None = None
    frame_loader: Callable[[VideoAsset], FrameSequence] | None = None

    @property
    def job_id(self) -> str:
        return self.job.job.job_id


class JobRegistry:
    """In-memory collection of jobs served by the task service and CLI."""

    def __init__(self, clock: Callable[[], float] = time.time, log_dir: str | Path | None = None):
        self.clock = clock
        self.log_dir = Path(log_dir) if log_dir else None
        self._jobs: dict[str, JobEntry] = {}
        self._lock = threading.Lock()
        self._counter = 0

    def __len__(self) -> int:
        return len(self._jobs)

    def job_ids(self) -> list[str]:
        return sorted(self._jobs)

    def get(self, job_id: str) -> JobEntry:
        entry = self._jobs.get(job_id)
        if entry is None:
            raise NotFoundError(f"unknown job: {job_id}")
        return entry

    def _event_sink(self, job_id: str) -> Callable[[Event], None] | None:
        if self.log_dir is None:
            return None
        self.log_dir.mkdir(parents=True, exist_ok=True)
        path = self.log_dir / f"{job_id}.jsonl"

        def sink(event: Event) -> None:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")

        return sink

    def create_job(self, config: dict | str | Path, job_id: str | None = None) -> JobEntry:
        """Register a job from a config file or dict, loading its corpus if given."""
        with self._lock:
            self._counter += 1
            default_id = f"job-{self._counter}"
        cfg = load_job_config(config, job_id=job_id, default_job_id=default_id)
        job_spec = cfg["job"]
        with self._lock:
            if job_spec.job_id in self._jobs:
                raise ValidationError(f"duplicate job id: {job_spec.job_id}")
            manifest = None
            loader = None
            if cfg["corpus"] is not None:
                manifest = ingest_manifest(cfg["corpus"])
                loader = make_frame_loader(manifest)
            entry = JobEntry(
                job=Job(
                    job_spec,
                    created_at=self.clock(),
                    event_sink=self._event_sink(job_spec.job_id),
                ),
                r1_config=R1Config.from_dict(cfg["r1"]),
                manifest=manifest,
                frame_loader=loader,
            )
            self._jobs[entry.job_id] = entry
            return entry

    def add(self, entry: JobEntry) -> JobEntry:
        with self._lock:
            if entry.job_id in self._jobs:
                raise ValidationError(f"duplicate job id: {entry.job_id}")
            self._jobs[entry.job_id] = entry
            return entry

    def run_r1(
        self,
        job_id: str,
        max_workers: int = 1,
        verdicts_path: str | Path | None = None,
    ) -> dict:
        """Seed the job by keyword search, then run the automated prefilters."""
        entry = self.get(job_id)
        if entry.manifest is None or entry.frame_loader is None:
            raise StateError(f"job {job_id} has no corpus attached")
        matched = search_by_keywords(entry.job.job.keywords, entry.manifest)
        candidates = sorted(matched, key=lambda a: a.id)
        if not candidates:
            raise ValidationError(f"no corpus videos match the keywords of job {job_id}")
        kept, verdicts = run_r1(
            candidates, entry.r1_config, entry.frame_loader, max_workers=max_workers
        )
        if verdicts_path is not None:
            write_verdicts_jsonl(verdicts, verdicts_path)
        entry.job.record_r1([a.id for a in kept], at=self.clock())
        return {
            "job_id": job_id,
            "corpus": len(entry.manifest),
            "matched": len(candidates),
            "kept": len(kept),
            "removed": len(candidates) - len(kept),
        }

    def save_event_log(self, job_id: str, path: str | Path) -> None:
        write_event_log(self.get(job_id).job.events, path)
