"""Hybrid human-machine curation of themed short-video compilations.

An automated prefilter (duration, motion, colorfulness, session dedup)
shrinks a keyword-seeded corpus; human workers then rapidly select
candidates, and a second worker group re-selects until a small set of
videos has unanimous consent. Includes a task service for worker UIs,
synthetic workers for end-to-end studies, and an evaluation toolkit.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .corpus import (
    CorpusManifest,
    FrameSequence,
    VideoAsset,
    ingest_manifest,
    load_frames,
    make_frame_loader,
    search_by_keywords,
)
from .errors import (
    CapExceededError,
    ConflictError,
    FrameSourceError,
    ManifestError,
    NotFoundError,
    OutOfScopeError,
    SifterError,
    StateError,
    ValidationError,
)
from .evaluation import (
    QueryEvent,
    RatingSample,
    StageTiming,
    TTestResult,
    bonferroni_significant,
    paired_t_test,
    per_video_time,
    relative_ratings,
    segment_sessions,
    sifter_time,
)
from .filters import (
    FilterVerdict,
    R1Config,
    aesthetics_filter,
    center_crop,
    colorfulness,
    dedup_sessions,
    derive_colorfulness_threshold,
    filter_duration,
    motion_filter,
    run_r1,
    sample_frames,
)
from .pipeline import (
    CompilationJob,
    CompilationOutput,
    Event,
    Job,
    PipelineParams,
    StageState,
    compute_agreement,
    load_job_config,
    plan_r2,
    read_event_log,
    replay_events,
    write_event_log,
)
from .registry import JobEntry, JobRegistry
from .service import create_app
from .sessions import SessionManager, WorkerSession
from .simworkers import (
    WorkerProfile,
    calibrate_quality_bias,
    generate_latent_quality,
    load_profiles,
    mixture_select,
    pairwise_overlap_trials,
    run_end_to_end,
    simulate_session,
    sweep_quality_bias,
)

__all__ = [name for name in dir() if not name.startswith("_")]
