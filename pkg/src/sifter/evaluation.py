"""Timing and quality measurements for curation runs.

Covers pipeline wall-clock accounting (parallel workers per stage), query-log
session segmentation with an inactivity timeout, per-video time ratios,
baseline-relative ratings, and paired t-tests with a Bonferroni threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from scipy.special import betainc

from .errors import ValidationError


@dataclass
class StageTiming:
    """Per-worker wall-clock minutes for one job's selection and agreement stages."""

    job_id: str
    selection: dict[str, float] = field(default_factory=dict)
    agreement: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for stage in (self.selection, self.agreement):
            for worker, minutes in stage.items():
                if minutes < 0:
                    raise ValidationError(f"negative duration for worker {worker}")


def sifter_time(timing: StageTiming) -> float:
    """Pipeline time: slowest selection worker plus slowest agreement worker.

    Workers within a stage run in parallel, so each stage contributes its
    maximum; single-worker stages contribute that worker's time.
    """
    if not timing.selection or not timing.agreement:
        raise ValidationError("both selection and agreement durations are required")
    return max(timing.selection.values()) + max(timing.agreement.values())


@dataclass(frozen=True)
class QueryEvent:
    """One curator search action."""

    curator_id: str
    at: float  # epoch seconds


@dataclass(frozen=True)
class QuerySession:
    """A burst of query activity delimited by the inactivity timeout."""

    start: float
    end: float
    events: int

    @property
    def duration_minutes(self) -> float:
        return (self.end - self.start) / 60.0


def segment_sessions(
    events: Iterable[QueryEvent], timeout_minutes: float = 30.0
) -> list[QuerySession]:
    """Split query events into sessions on gaps strictly greater than the timeout.

    Events are sorted by time first; a gap of exactly the timeout stays in
    the same session. A singleton session has zero duration.
    """
    ordered = sorted(events, key=lambda e: e.at)
    if not ordered:
        return []
    timeout_s = timeout_minutes * 60.0
    sessions: list[QuerySession] = []
    start = prev = ordered[0].at
    count = 1
    for event in ordered[1:]:
        if event.at - prev > timeout_s:
            sessions.append(QuerySession(start=start, end=prev, events=count))
            start = event.at
            count = 0
        prev = event.at
        count += 1
    sessions.append(QuerySession(start=start, end=prev, events=count))
    return sessions


def total_session_minutes(
    events: Iterable[QueryEvent], timeout_minutes: float = 30.0
) -> float:
    return sum(s.duration_minutes for s in segment_sessions(events, timeout_minutes))


def curator_job_time(
    events: Iterable[QueryEvent], timeout_minutes: float = 30.0
) -> tuple[float, dict[str, float]]:
    """Total curator minutes for one job: per-curator sessions, summed.

    Returns the total along with the per-curator breakdown.
    """
    by_curator: dict[str, list[QueryEvent]] = {}
    for event in events:
        by_curator.setdefault(event.curator_id, []).append(event)
    breakdown = {
        curator: total_session_minutes(evts, timeout_minutes)
        for curator, evts in sorted(by_curator.items())
    }
    return sum(breakdown.values()), breakdown


def per_video_time(
    per_job: Sequence[tuple[float, int]]
) -> tuple[float, float | None]:
    """Mean over jobs of minutes/videos, with its sample (n-1) standard deviation.

    The mean of per-job ratios, not the ratio of totals. Standard deviation
    is None for a single job.
    """
    if not per_job:
        raise ValidationError("per-job list must be non-empty")
    ratios = []
    for minutes, count in per_job:
        if count <= 0:
            raise ValidationError("video count must be positive")
        ratios.append(minutes / count)
    mean = sum(ratios) / len(ratios)
    if len(ratios) == 1:
        return mean, None
    var = sum((r - mean) ** 2 for r in ratios) / (len(ratios) - 1)
    return mean, math.sqrt(var)


@dataclass(frozen=True)
class RatingSample:
    """One relevance rating on a 5-point scale."""

    rater_id: str
    condition: str
    video_id: str
    score: int

    def __post_init__(self):
        if self.score not in (1, 2, 3, 4, 5):
            raise ValidationError(f"score must be in 1..5, got {self.score}")


def relative_ratings(
    condition: Sequence[RatingSample], baseline: Sequence[RatingSample]
) -> tuple[list[float], float]:
    """Scores minus the same rater's mean baseline score.

    Baseline subtraction is per rater, correcting for differences in rater
    background; raters appearing in the condition but not the baseline are
    an error. Returns all relative scores plus their mean.
    """
    if not baseline:
        raise ValidationError("baseline ratings must be non-empty")
    if not condition:
        raise ValidationError("condition ratings must be non-empty")
    sums: dict[str, list[int]] = {}
    for sample in baseline:
        sums.setdefault(sample.rater_id, []).append(sample.score)
    baseline_mean = {rater: sum(v) / len(v) for rater, v in sums.items()}
    relatives: list[float] = []
    for sample in condition:
        if sample.rater_id not in baseline_mean:
            raise ValidationError(f"rater {sample.rater_id} has no baseline ratings")
        relatives.append(sample.score - baseline_mean[sample.rater_id])
    return relatives, sum(relatives) / len(relatives)


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p: float


def student_t_two_tailed_p(t: float, df: int) -> float:
    """Two-tailed tail probability of Student's t via the regularized incomplete beta."""
    if df < 1:
        raise ValidationError("degrees of freedom must be >= 1")
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return float(betainc(df / 2.0, 0.5, x))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-tailed paired-samples t-test.

    All-zero differences give t = 0, p = 1; zero-variance nonzero differences
    are rejected (the statistic is undefined).
    """
    if len(a) != len(b):
        raise ValidationError(f"paired samples differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValidationError("paired t-test needs at least 2 pairs")
    d = [x - y for x, y in zip(a, b)]
    mean = sum(d) / n
    var = sum((x - mean) ** 2 for x in d) / (n - 1)
    df = n - 1
    if var == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, df=df, p=1.0)
        raise ValidationError("zero-variance nonzero differences: t is undefined")
    t = mean / math.sqrt(var / n)
    return TTestResult(t=t, df=df, p=student_t_two_tailed_p(t, df))


def bonferroni_significant(p: float, m: int, alpha: float = 0.05) -> bool:
    """Strict per-comparison significance test at alpha / m."""
    if m < 1:
        raise ValidationError("comparison count must be >= 1")
    return p < alpha / m
