"""Corpus ingestion, keyword search, and frame access.

The corpus is a JSON Lines manifest of video metadata. Frames are reached
through a locator per video: either a directory of image files (read in
lexicographic order) or a ``cmd:`` descriptor that invokes an external
decoder writing image files into a scratch directory.
"""

from __future__ import annotations

import json
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from PIL import Image

from .errors import FrameSourceError, ManifestError, ValidationError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class VideoAsset:
    """Metadata for one short video; the unit flowing through all stages."""

    id: str
    uploader_id: str
    posted_at: float  # epoch seconds
    duration_s: float
    caption: str = ""
    frames: str = ""  # locator: image directory, or "cmd:<template>"

    def __post_init__(self):
        if not self.id:
            raise ValidationError("video id must be non-empty")
        if self.duration_s < 0:
            raise ValidationError(f"video {self.id}: duration must be >= 0")


@dataclass
class FrameSequence:
    """Decoded frames for one video, in presentation order, uniform dimensions."""

    video_id: str
    frames: list[np.ndarray]

    def __post_init__(self):
        if not self.frames:
            raise ValidationError(f"video {self.video_id}: frame sequence is empty")
        shape = self.frames[0].shape
        for i, frame in enumerate(self.frames):
            if frame.shape != shape:
                raise ValidationError(
                    f"video {self.video_id}: frame {i} has shape {frame.shape}, expected {shape}"
                )

    @property
    def frame_count(self) -> int:
        return len(self.frames)


@dataclass
class CorpusManifest:
    """Validated collection of video assets from one manifest file."""

    entries: list[VideoAsset]
    source_path: str = ""
    _by_id: dict[str, VideoAsset] = field(init=False, repr=False)

    def __post_init__(self):
        self._by_id = {}
        for asset in self.entries:
            if asset.id in self._by_id:
                raise ManifestError(f"duplicate video id: {asset.id}")
            self._by_id[asset.id] = asset

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, video_id: str) -> VideoAsset | None:
        return self._by_id.get(video_id)

    @property
    def base_dir(self) -> Path | None:
        return Path(self.source_path).parent if self.source_path else None


def parse_timestamp(value) -> float:
    """Accept epoch seconds (number) or an ISO-8601 string; return epoch seconds."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return float(text)
        except ValueError:
            pass
        try:
            # Python 3.10 fromisoformat does not accept a trailing Z.
            dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
        except ValueError as exc:
            raise ValidationError(f"invalid timestamp: {value!r}") from exc
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    raise ValidationError(f"invalid timestamp: {value!r}")


def _asset_from_record(record: dict) -> VideoAsset:
    for key in ("id", "uploader_id", "posted_at", "duration_s"):
        if key not in record:
            raise ValidationError(f"missing field {key!r}")
    duration = record["duration_s"]
    if not isinstance(duration, (int, float)) or isinstance(duration, bool):
        raise ValidationError(f"duration_s must be a number, got {duration!r}")
    return VideoAsset(
        id=str(record["id"]),
        uploader_id=str(record["uploader_id"]),
        posted_at=parse_timestamp(record["posted_at"]),
        duration_s=float(duration),
        caption=str(record.get("caption", "")),
        frames=str(record.get("frames", "")),
    )


def ingest_manifest(path: str | Path) -> CorpusManifest:
    """Read a JSON Lines manifest, validating records and id uniqueness.

    Raises OSError for unreadable files and ManifestError for malformed
    records (naming the line) or duplicate ids (naming the id).
    """
    path = Path(path)
    entries: list[VideoAsset] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise ManifestError(f"{path}: line {lineno}: expected a JSON object")
            try:
                asset = _asset_from_record(record)
            except ValidationError as exc:
                raise ManifestError(f"{path}: line {lineno}: {exc}") from exc
            if asset.id in seen:
                raise ManifestError(f"{path}: line {lineno}: duplicate video id: {asset.id}")
            seen.add(asset.id)
            entries.append(asset)
    return CorpusManifest(entries=entries, source_path=str(path))


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens, split on everything else (incl. underscore)."""
    return [t.casefold() for t in _TOKEN_RE.findall(text)]


def _contains_sequence(haystack: list[str], needle: list[str]) -> bool:
    if not needle or len(needle) > len(haystack):
        return False
    for i in range(len(haystack) - len(needle) + 1):
        if haystack[i : i + len(needle)] == needle:
            return True
    return False


def search_by_keywords(keywords: Iterable[str], manifest: CorpusManifest) -> set[VideoAsset]:
    """Case-insensitive token search over captions; OR across keywords.

    A multi-word keyword matches only as a contiguous token sequence.
    Result order is unspecified; downstream stages randomize.
    """
    keyword_list = list(keywords)
    if not keyword_list:
        raise ValidationError("keyword list must be non-empty")
    token_seqs = []
    for kw in keyword_list:
        tokens = tokenize(kw)
        if not tokens:
            raise ValidationError(f"keyword {kw!r} is empty after trimming")
        token_seqs.append(tokens)
    matches: set[VideoAsset] = set()
    for asset in manifest.entries:
        caption_tokens = tokenize(asset.caption)
        if any(_contains_sequence(caption_tokens, seq) for seq in token_seqs):
            matches.add(asset)
    return matches


def _read_image(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def _frames_from_directory(video_id: str, directory: Path) -> FrameSequence:
    if not directory.is_dir():
        raise FrameSourceError(video_id, f"frame directory not found: {directory}")
    files = sorted(
        p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()
    )
    if not files:
        raise FrameSourceError(video_id, f"no image files in {directory}")
    try:
        frames = [_read_image(p) for p in files]
        return FrameSequence(video_id=video_id, frames=frames)
    except (OSError, ValidationError) as exc:
        raise FrameSourceError(video_id, str(exc)) from exc


def _frames_from_command(video_id: str, template: str) -> FrameSequence:
    with tempfile.TemporaryDirectory(prefix="sifter-frames-") as tmp:
        command = [part.format(outdir=tmp, id=video_id) for part in shlex.split(template)]
        try:
            subprocess.run(command, check=True, capture_output=True, timeout=120)
        except (OSError, subprocess.SubprocessError) as exc:
            raise FrameSourceError(video_id, f"decoder command failed: {exc}") from exc
        return _frames_from_directory(video_id, Path(tmp))


def load_frames(asset: VideoAsset, base_dir: str | Path | None = None) -> FrameSequence:
    """Resolve an asset's frame locator and load its frames.

    Directory locators may be relative to ``base_dir`` (typically the
    manifest's directory). Deterministic for file-based sources.
    """
    ref = asset.frames
    if not ref:
        raise FrameSourceError(asset.id, "no frame locator")
    if ref.startswith("cmd:"):
        return _frames_from_command(asset.id, ref[len("cmd:") :])
    directory = Path(ref)
    if not directory.is_absolute() and base_dir is not None:
        directory = Path(base_dir) / directory
    return _frames_from_directory(asset.id, directory)


def make_frame_loader(
    manifest: CorpusManifest, base_dir: str | Path | None = None
) -> Callable[[VideoAsset], FrameSequence]:
    """Loader bound to a manifest's directory, for passing into the prefilter stage."""
    base = base_dir if base_dir is not None else manifest.base_dir
    return lambda asset: load_frames(asset, base_dir=base)
