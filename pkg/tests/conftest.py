"""Shared fixtures: synthetic frames, corpora, and manifest files."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from sifter.corpus import FrameSequence, VideoAsset


def solid_frame(r: int, g: int, b: int, size: tuple[int, int] = (32, 32)) -> np.ndarray:
    frame = np.zeros((size[0], size[1], 3), dtype=np.uint8)
    frame[:, :, 0] = r
    frame[:, :, 1] = g
    frame[:, :, 2] = b
    return frame


def gray_frame(level: int = 128, size: tuple[int, int] = (32, 32)) -> np.ndarray:
    return solid_frame(level, level, level, size)


def moving_frames(
    count: int = 5,
    size: tuple[int, int] = (32, 32),
    block: int = 8,
    base: int = 128,
) -> list[np.ndarray]:
    """Frames whose top-left block alternates 0/255 between consecutive frames."""
    frames = []
    for i in range(count):
        frame = gray_frame(base, size)
        frame[:block, :block, :] = 255 if i % 2 else 0
        frames.append(frame)
    return frames


def asset(
    video_id: str,
    uploader: str = "u1",
    posted_at: float = 0.0,
    duration: float = 10.0,
    caption: str = "",
    frames: str = "",
) -> VideoAsset:
    return VideoAsset(
        id=video_id,
        uploader_id=uploader,
        posted_at=posted_at,
        duration_s=duration,
        caption=caption,
        frames=frames,
    )


def sequence(video_id: str, frames: list[np.ndarray]) -> FrameSequence:
    return FrameSequence(video_id=video_id, frames=frames)


def write_manifest(path: Path, records: list[dict]) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    return path


def manifest_record(
    video_id: str,
    uploader: str = "u1",
    posted_at: float = 0.0,
    duration: float = 10.0,
    caption: str = "",
    frames: str = "",
) -> dict:
    return {
        "id": video_id,
        "uploader_id": uploader,
        "posted_at": posted_at,
        "duration_s": duration,
        "caption": caption,
        "frames": frames,
    }


@pytest.fixture
def tmp_manifest(tmp_path: Path):
    def _make(records: list[dict], name: str = "corpus.jsonl") -> Path:
        return write_manifest(tmp_path / name, records)

    return _make


class FakeClock:
    """Deterministic, manually advanced clock for session and service tests."""

    def __init__(self, start: float = 1_000.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> float:
        self.now += seconds
        return self.now


def write_clip_dir(directory: Path, frame_count: int = 5) -> None:
    """A small clip that passes every frame filter: moving and colorful."""
    from PIL import Image

    directory.mkdir(parents=True, exist_ok=True)
    for i in range(frame_count):
        frame = solid_frame(220, 40, 40, (32, 32))
        offset = (i * 7) % 24
        frame[offset : offset + 8, :16, :] = 255 if i % 2 else 0
        Image.fromarray(frame).save(directory / f"f{i:02d}.png")


def write_clip_corpus(base: Path, count: int, spacing_s: float = 600.0) -> Path:
    """A corpus of distinct-session clips, all of which survive the prefilter."""
    records = []
    for i in range(count):
        video_id = f"clip{i:03d}"
        write_clip_dir(base / "media" / video_id)
        records.append(
            manifest_record(
                video_id,
                uploader=f"u{i}",
                posted_at=i * spacing_s,
                duration=8.0,
                caption=f"magic tricks take {i}",
                frames=f"media/{video_id}",
            )
        )
    return write_manifest(base / "corpus.jsonl", records)
