"""Automated prefilter stage (R1): duration, session dedup, motion, colorfulness.

Each filter is a pure function producing a FilterVerdict. The batch runner
applies them in a fixed order (cheap metadata filters before any frame is
decoded) and short-circuits so every removed video carries exactly one
reason.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import FrameSequence, VideoAsset
from .errors import FrameSourceError, ValidationError

REASON_KEPT = "kept"
REASON_TOO_SHORT = "too_short"
REASON_STATIC = "static_content"
REASON_LOW_COLOR = "low_colorfulness"
REASON_SESSION_DUP = "same_session_duplicate"
REASON_UNREADABLE = "unreadable"

REASONS = (
    REASON_KEPT,
    REASON_TOO_SHORT,
    REASON_STATIC,
    REASON_LOW_COLOR,
    REASON_SESSION_DUP,
    REASON_UNREADABLE,
)

@dataclass(frozen=True)
class R1Config:
    """Thresholds for the four automated filters."""

    min_duration: float = 3.0
    sample_count: int = 5
    crop_size: int = 200
    motion_diff_threshold: float = 1000.0
    motion_low_diff_count: int = 4
    colorfulness_threshold: float = 15.0
    dedup_window: float = 120.0

    def __post_init__(self):
        if self.sample_count < 2:
            raise ValidationError("sample_count must be >= 2")
        for name in ("min_duration", "crop_size", "motion_diff_threshold",
                     "colorfulness_threshold", "dedup_window"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if not 0 <= self.motion_low_diff_count <= self.sample_count - 1:
            raise ValidationError(
                "motion_low_diff_count must be between 0 and sample_count - 1"
            )

    @classmethod
    def from_dict(cls, data: dict) -> "R1Config":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown prefilter config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "min_duration": self.min_duration,
            "sample_count": self.sample_count,
            "crop_size": self.crop_size,
            "motion_diff_threshold": self.motion_diff_threshold,
            "motion_low_diff_count": self.motion_low_diff_count,
            "colorfulness_threshold": self.colorfulness_threshold,
            "dedup_window": self.dedup_window,
        }


@dataclass
class FilterVerdict:
    """Outcome of the prefilter stage for one video."""

    video_id: str
    kept: bool
    reason: str
    diagnostics: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.reason not in REASONS:
            raise ValidationError(f"unknown verdict reason: {self.reason}")
        if self.kept != (self.reason == REASON_KEPT):
            raise ValidationError("kept flag must agree with reason")

    def to_dict(self) -> dict:
        return {
            "id": self.video_id,
            "kept": self.kept,
            "reason": self.reason,
            "diagnostics": self.diagnostics,
        }


def filter_duration(asset: VideoAsset, cfg: R1Config) -> FilterVerdict:
    """Remove videos strictly shorter than the minimum duration."""
    kept = asset.duration_s >= cfg.min_duration
    return FilterVerdict(
        video_id=asset.id,
        kept=kept,
        reason=REASON_KEPT if kept else REASON_TOO_SHORT,
        diagnostics={"duration_s": float(asset.duration_s)},
    )


def sample_frames(seq: FrameSequence, cfg: R1Config) -> list[np.ndarray]:
    """Systematic sample of ``sample_count`` frames across the sequence.

    Index of sample k is floor(k * (N - 1) / (sample_count - 1)); when the
    sequence is shorter than sample_count the formula repeats frames.
    """
    n = seq.frame_count
    if n < 1:
        raise ValidationError(f"video {seq.video_id}: empty frame sequence")
    span = cfg.sample_count - 1
    indices = [(k * (n - 1)) // span for k in range(cfg.sample_count)]
    return [seq.frames[i] for i in indices]


def center_crop(frame: np.ndarray, cfg: R1Config) -> np.ndarray:
    """Centered crop_size x crop_size window; short dimensions are used in full."""
    if frame.size == 0:
        raise ValidationError("cannot crop an empty frame")
    h, w = frame.shape[:2]
    ch = min(h, cfg.crop_size)
    cw = min(w, cfg.crop_size)
    top = (h - ch) // 2
    left = (w - cw) // 2
    return frame[top : top + ch, left : left + cw]


def to_grayscale(frame: np.ndarray) -> np.ndarray:
    """8-bit grayscale via 0.299/0.587/0.114 luma, rounded half-up.

    Computed exactly in fixed-point integer arithmetic (weights x1000), so
    results carry no floating-point rounding at all.
    """
    luma = np.multiply(frame[..., 0], 299, dtype=np.int32)
    luma += np.multiply(frame[..., 1], 587, dtype=np.int32)
    luma += np.multiply(frame[..., 2], 114, dtype=np.int32)
    luma += 500
    luma //= 1000
    return luma.astype(np.int16)


def frame_difference(a: np.ndarray, b: np.ndarray) -> float:
    """Sum of absolute per-pixel grayscale differences between two frames."""
    if a.shape != b.shape:
        raise ValidationError(f"frame shape mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


def motion_filter(
    frames: Sequence[np.ndarray], cfg: R1Config, video_id: str = ""
) -> FilterVerdict:
    """Remove videos whose sampled center crops barely change.

    Removal fires when at least ``motion_low_diff_count`` of the consecutive
    pair differences fall below ``motion_diff_threshold``.
    """
    if len(frames) != cfg.sample_count:
        raise ValidationError(
            f"expected {cfg.sample_count} sampled frames, got {len(frames)}"
        )
    grays = [to_grayscale(center_crop(f, cfg)) for f in frames]
    diffs = [frame_difference(grays[i], grays[i + 1]) for i in range(len(grays) - 1)]
    low = sum(1 for d in diffs if d < cfg.motion_diff_threshold)
    removed = low >= cfg.motion_low_diff_count
    diagnostics = {f"motion_diff_{i}": d for i, d in enumerate(diffs)}
    diagnostics["motion_low_diff_count"] = float(low)
    return FilterVerdict(
        video_id=video_id,
        kept=not removed,
        reason=REASON_STATIC if removed else REASON_KEPT,
        diagnostics=diagnostics,
    )


def colorfulness(frame: np.ndarray) -> float:
    """Opponent-channel colorfulness score of an 8-bit RGB frame.

    With rg = R - G and yb = (R + G) / 2 - B over all pixels, the score is
    sqrt(std(rg)^2 + std(yb)^2) + 0.3 * sqrt(mean(rg)^2 + mean(yb)^2),
    using population standard deviation. Gray frames score exactly 0.
    """
    if frame.size == 0:
        raise ValidationError("cannot score an empty frame")
    r, g, b = frame[..., 0], frame[..., 1], frame[..., 2]
    rg = np.subtract(r, g, dtype=np.int16)
    # Work with 2*yb = r + g - 2b, which stays exact in int16 ([-510, 510]).
    yb2 = np.add(r, g, dtype=np.int16)
    yb2 -= np.multiply(b, 2, dtype=np.int16)
    # Population moments from exact integer sums.
    n = rg.size
    mean_rg = int(np.sum(rg, dtype=np.int64)) / n
    mean_yb = int(np.sum(yb2, dtype=np.int64)) / (2 * n)
    sq_rg = int(np.sum(np.multiply(rg, rg, dtype=np.int32), dtype=np.int64))
    sq_yb2 = int(np.sum(np.multiply(yb2, yb2, dtype=np.int32), dtype=np.int64))
    var_rg = sq_rg / n - mean_rg**2
    var_yb = sq_yb2 / (4 * n) - mean_yb**2
    return math.sqrt(max(var_rg + var_yb, 0.0)) + 0.3 * math.sqrt(mean_rg**2 + mean_yb**2)


def aesthetics_filter(
    frames: Sequence[np.ndarray], cfg: R1Config, video_id: str = ""
) -> FilterVerdict:
    """Remove videos whose mean center-crop colorfulness is below threshold."""
    if len(frames) != cfg.sample_count:
        raise ValidationError(
            f"expected {cfg.sample_count} sampled frames, got {len(frames)}"
        )
    scores = [colorfulness(center_crop(f, cfg)) for f in frames]
    mean_score = float(np.mean(scores))
    removed = mean_score < cfg.colorfulness_threshold
    diagnostics = {f"colorfulness_{i}": s for i, s in enumerate(scores)}
    diagnostics["colorfulness_mean"] = mean_score
    return FilterVerdict(
        video_id=video_id,
        kept=not removed,
        reason=REASON_LOW_COLOR if removed else REASON_KEPT,
        diagnostics=diagnostics,
    )


def mean_colorfulness(seq: FrameSequence, cfg: R1Config) -> float:
    """Mean center-crop colorfulness over a video's sampled frames."""
    sampled = sample_frames(seq, cfg)
    return float(np.mean([colorfulness(center_crop(f, cfg)) for f in sampled]))


def derive_colorfulness_threshold(
    reference: Sequence[FrameSequence],
    percentile: float = 5.0,
    cfg: R1Config | None = None,
) -> float:
    """Nearest-rank percentile of per-video mean colorfulness over a reference set.

    Intended for deriving the aesthetics threshold from already-published
    compilations known to be acceptable.
    """
    if not reference:
        raise ValidationError("reference set must be non-empty")
    if not 0 <= percentile <= 100:
        raise ValidationError("percentile must be in [0, 100]")
    cfg = cfg or R1Config()
    scores = sorted(mean_colorfulness(seq, cfg) for seq in reference)
    rank = max(1, math.ceil(percentile / 100.0 * len(scores)))
    return scores[rank - 1]


def dedup_sessions(
    assets: Iterable[VideoAsset], cfg: R1Config
) -> tuple[list[VideoAsset], list[FilterVerdict]]:
    """Keep one video per uploader posting session.

    Per uploader, videos are sorted by (posted_at, id); the first is kept and
    everything posted at most ``dedup_window`` seconds after it (inclusive) is
    dropped. The first video past the window starts a new session. Returns the
    kept videos in canonical (posted_at, id) order plus verdicts for the
    dropped ones only; survivors get their final verdict downstream.
    """
    by_uploader: dict[str, list[VideoAsset]] = {}
    for asset in assets:
        by_uploader.setdefault(asset.uploader_id, []).append(asset)
    kept: list[VideoAsset] = []
    verdicts: list[FilterVerdict] = []
    for uploads in by_uploader.values():
        uploads.sort(key=lambda a: (a.posted_at, a.id))
        window_end = -math.inf
        for asset in uploads:
            if asset.posted_at <= window_end:
                verdicts.append(
                    FilterVerdict(
                        video_id=asset.id,
                        kept=False,
                        reason=REASON_SESSION_DUP,
                        diagnostics={"posted_at": asset.posted_at},
                    )
                )
            else:
                kept.append(asset)
                window_end = asset.posted_at + cfg.dedup_window
    kept.sort(key=lambda a: (a.posted_at, a.id))
    return kept, verdicts


def _frame_stage_verdict(
    asset: VideoAsset,
    cfg: R1Config,
    frame_loader: Callable[[VideoAsset], FrameSequence],
) -> FilterVerdict:
    """Motion then aesthetics over one video's sampled frames."""
    try:
        seq = frame_loader(asset)
        sampled = sample_frames(seq, cfg)
    except (FrameSourceError, ValidationError):
        return FilterVerdict(asset.id, kept=False, reason=REASON_UNREADABLE)
    motion = motion_filter(sampled, cfg, video_id=asset.id)
    if not motion.kept:
        return motion
    aesthetics = aesthetics_filter(sampled, cfg, video_id=asset.id)
    aesthetics.diagnostics.update(motion.diagnostics)
    return aesthetics


def run_r1(
    candidates: Iterable[VideoAsset],
    cfg: R1Config,
    frame_loader: Callable[[VideoAsset], FrameSequence],
    max_workers: int = 1,
) -> tuple[list[VideoAsset], list[FilterVerdict]]:
    """Apply all four filters: duration -> session dedup -> motion -> aesthetics.

    Metadata filters run before any frame is loaded. Every input gets exactly
    one verdict, in input order; kept videos are returned in input order.
    Per-video frame errors become ``unreadable`` verdicts, not exceptions.
    Frame-stage work may run in parallel; results are order-independent.
    """
    assets = list(candidates)
    if not assets:
        raise ValidationError("candidate set must be non-empty")
    verdict_by_id: dict[str, FilterVerdict] = {}

    survivors: list[VideoAsset] = []
    for asset in assets:
        verdict = filter_duration(asset, cfg)
        if verdict.kept:
            survivors.append(asset)
        else:
            verdict_by_id[asset.id] = verdict

    deduped, dup_verdicts = dedup_sessions(survivors, cfg)
    for verdict in dup_verdicts:
        verdict_by_id[verdict.video_id] = verdict
    deduped_ids = {a.id for a in deduped}
    frame_stage = [a for a in survivors if a.id in deduped_ids]

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = pool.map(lambda a: _frame_stage_verdict(a, cfg, frame_loader), frame_stage)
    else:
        results = (_frame_stage_verdict(a, cfg, frame_loader) for a in frame_stage)
    for verdict in results:
        verdict_by_id[verdict.video_id] = verdict

    verdicts = [verdict_by_id[a.id] for a in assets]
    kept = [a for a in assets if verdict_by_id[a.id].kept]
    return kept, verdicts


def write_verdicts_jsonl(verdicts: Iterable[FilterVerdict], path: str | Path) -> None:
    """Export verdicts as JSON Lines for audit."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for verdict in verdicts:
            fh.write(json.dumps(verdict.to_dict(), sort_keys=True) + "\n")
