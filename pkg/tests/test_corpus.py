"""Corpus ingestion, keyword search, and frame loading."""

from __future__ import annotations

import random
import shlex
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from sifter.corpus import (
    CorpusManifest,
    ingest_manifest,
    load_frames,
    make_frame_loader,
    search_by_keywords,
    tokenize,
)
from sifter.errors import FrameSourceError, ManifestError, ValidationError

from conftest import asset, manifest_record, write_manifest


class TestIngest:
    def test_three_record_manifest(self, tmp_manifest):
        path = tmp_manifest([manifest_record(f"v{i}") for i in range(3)])
        manifest = ingest_manifest(path)
        assert len(manifest) == 3
        assert [a.id for a in manifest.entries] == ["v0", "v1", "v2"]

    def test_duplicate_id_rejected(self, tmp_manifest):
        path = tmp_manifest([manifest_record("v1"), manifest_record("v1")])
        with pytest.raises(ManifestError, match="v1"):
            ingest_manifest(path)

    def test_malformed_record_names_line(self, tmp_manifest, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "v1", "uploader_id": "u", "posted_at": 0, "duration_s": 1}\nnot json\n')
        with pytest.raises(ManifestError, match="line 2"):
            ingest_manifest(path)

    def test_missing_field_names_line(self, tmp_manifest):
        record = manifest_record("v1")
        del record["duration_s"]
        path = tmp_manifest([record])
        with pytest.raises(ManifestError, match="line 1"):
            ingest_manifest(path)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(OSError):
            ingest_manifest(tmp_path / "missing.jsonl")

    def test_corpus_sized_manifest(self, tmp_manifest):
        # C1-scale corpus: 1,922 records round-trip unchanged.
        path = tmp_manifest([manifest_record(f"v{i:05d}") for i in range(1922)])
        assert len(ingest_manifest(path)) == 1922

    def test_iso_timestamps(self, tmp_manifest):
        record = manifest_record("v1")
        record["posted_at"] = "2020-01-01T00:00:10Z"
        manifest = ingest_manifest(tmp_manifest([record]))
        assert manifest.entries[0].posted_at == pytest.approx(1577836810.0)

    def test_negative_duration_rejected(self, tmp_manifest):
        record = manifest_record("v1", duration=-1.0)
        with pytest.raises(ManifestError, match="line 1"):
            ingest_manifest(tmp_manifest([record]))


def brute_force_match(caption: str, keywords: list[str]) -> bool:
    """Independent oracle: scan every token window for every keyword."""
    caption_tokens = tokenize(caption)
    for keyword in keywords:
        needle = tokenize(keyword)
        for start in range(len(caption_tokens)):
            if caption_tokens[start : start + len(needle)] == needle and needle:
                return True
    return False


class TestSearch:
    CAPTIONS = ["Magic hour!", "card TRICKS", "majestic"]

    def _manifest(self, captions: list[str]) -> CorpusManifest:
        entries = [asset(f"v{i}", caption=c) for i, c in enumerate(captions)]
        return CorpusManifest(entries=entries)

    def test_token_matching(self):
        manifest = self._manifest(self.CAPTIONS)
        keywords = ["magic", "tricks"]
        expected = {
            a.id for a in manifest.entries if brute_force_match(a.caption, keywords)
        }
        assert expected == {"v0", "v1"}  # "majestic" must not substring-match
        result = search_by_keywords(keywords, manifest)
        assert {a.id for a in result} == expected

    def test_multiword_keyword_contiguous(self):
        manifest = self._manifest(["sound on asmr", "sound of silence on repeat"])
        result = search_by_keywords(["sound on", "asmr"], manifest)
        assert {a.id for a in result} == {"v0"}

    def test_empty_corpus(self):
        assert search_by_keywords(["x"], CorpusManifest(entries=[])) == set()

    def test_empty_keyword_list_rejected(self):
        with pytest.raises(ValidationError):
            search_by_keywords([], self._manifest(self.CAPTIONS))

    def test_blank_keyword_rejected(self):
        with pytest.raises(ValidationError):
            search_by_keywords(["  !"], self._manifest(self.CAPTIONS))

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.sampled_from(["magic", "hour", "card", "tricks", "wow"]), min_size=1, max_size=3))
    def test_result_is_subset_and_matches_oracle(self, keywords):
        manifest = self._manifest(self.CAPTIONS + ["wow magic tricks"])
        result = search_by_keywords(keywords, manifest)
        assert result <= set(manifest.entries)
        expected = {a.id for a in manifest.entries if brute_force_match(a.caption, keywords)}
        assert {a.id for a in result} == expected

    def test_order_independence(self):
        entries = [asset(f"v{i}", caption=c) for i, c in enumerate(self.CAPTIONS * 3)]
        shuffled = entries[:]
        random.Random(5).shuffle(shuffled)
        a = search_by_keywords(["magic"], CorpusManifest(entries=entries))
        b = search_by_keywords(["magic"], CorpusManifest(entries=shuffled))
        assert {x.id for x in a} == {x.id for x in b}


def write_frame_dir(directory: Path, count: int, size=(8, 8)) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(42)
    for i in range(count):
        pixels = rng.integers(0, 256, (size[0], size[1], 3), dtype=np.uint8)
        Image.fromarray(pixels).save(directory / f"frame_{i:03d}.png")


class TestFrames:
    def test_directory_source(self, tmp_path):
        write_frame_dir(tmp_path / "frames", 30)
        seq = load_frames(asset("v1", frames=str(tmp_path / "frames")))
        assert seq.frame_count == 30
        assert all(f.shape == (8, 8, 3) for f in seq.frames)

    def test_lexicographic_order_is_presentation_order(self, tmp_path):
        directory = tmp_path / "frames"
        directory.mkdir()
        for i in (2, 0, 1):
            frame = np.full((4, 4, 3), i * 10, dtype=np.uint8)
            Image.fromarray(frame).save(directory / f"f{i}.png")
        seq = load_frames(asset("v1", frames=str(directory)))
        assert [int(f[0, 0, 0]) for f in seq.frames] == [0, 10, 20]

    def test_empty_directory_is_an_error(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(FrameSourceError) as err:
            load_frames(asset("v1", frames=str(tmp_path / "empty")))
        assert err.value.video_id == "v1"

    def test_missing_directory_is_an_error(self, tmp_path):
        with pytest.raises(FrameSourceError):
            load_frames(asset("v1", frames=str(tmp_path / "nope")))

    def test_relative_locator_resolves_against_base_dir(self, tmp_path):
        write_frame_dir(tmp_path / "media" / "v1", 3)
        seq = load_frames(asset("v1", frames="media/v1"), base_dir=tmp_path)
        assert seq.frame_count == 3

    def test_determinism(self, tmp_path):
        write_frame_dir(tmp_path / "frames", 5)
        a = load_frames(asset("v1", frames=str(tmp_path / "frames")))
        b = load_frames(asset("v1", frames=str(tmp_path / "frames")))
        assert all(np.array_equal(x, y) for x, y in zip(a.frames, b.frames))

    def test_command_source(self, tmp_path):
        script = tmp_path / "decode.py"
        script.write_text(
            "import sys\n"
            "from PIL import Image\n"
            "import numpy as np\n"
            "out = sys.argv[1]\n"
            "for i in range(5):\n"
            "    Image.fromarray(np.full((6, 6, 3), i, dtype=np.uint8)).save(f'{out}/f{i}.png')\n"
        )
        ref = f"cmd:{shlex.quote(sys.executable)} {shlex.quote(str(script))} {{outdir}}"
        seq = load_frames(asset("v1", frames=ref))
        assert seq.frame_count == 5
        assert [int(f[0, 0, 0]) for f in seq.frames] == [0, 1, 2, 3, 4]

    def test_failing_command_is_an_error(self):
        with pytest.raises(FrameSourceError):
            load_frames(asset("v1", frames=f"cmd:{sys.executable} -c 'raise SystemExit(3)'"))

    def test_make_frame_loader_uses_manifest_dir(self, tmp_path):
        write_frame_dir(tmp_path / "clips" / "v1", 2)
        path = write_manifest(
            tmp_path / "corpus.jsonl", [manifest_record("v1", frames="clips/v1")]
        )
        manifest = ingest_manifest(path)
        loader = make_frame_loader(manifest)
        assert loader(manifest.entries[0]).frame_count == 2
