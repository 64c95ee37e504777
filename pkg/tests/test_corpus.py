import json

import numpy as np
import pytest

from segtopics.corpus import (
    Chapter,
    ManifestError,
    RecordingManifest,
    Segmentation,
    derive_labels,
    make_blocks,
    manifest_to_json,
    parse_manifest,
    parse_segmentation,
    round_half_up,
    segmentation_to_json,
    split_corpus,
)

MINIMAL = {
    "id": "a",
    "language": "en",
    "date": "2024-01-05",
    "duration_sec": 60.0,
    "audio_path": None,
    "chapters": [{"start_sec": 0.0, "title": "x"}],
}


def _manifest(**overrides) -> str:
    doc = dict(MINIMAL)
    doc.update(overrides)
    return json.dumps(doc)


class TestParseManifest:
    def test_minimal_document(self):
        m = parse_manifest(_manifest())
        assert m.id == "a"
        assert len(m.chapters) == 1
        assert m.chapters[0].title == "x"

    def test_not_strictly_increasing(self):
        chapters = [{"start_sec": s, "title": ""} for s in (0.0, 30.0, 30.0)]
        with pytest.raises(ManifestError, match="strictly increasing"):
            parse_manifest(_manifest(chapters=chapters))

    def test_first_chapter_not_at_zero(self):
        chapters = [{"start_sec": 1.0, "title": ""}]
        with pytest.raises(ManifestError, match=r"chapters\[0\]"):
            parse_manifest(_manifest(chapters=chapters))

    def test_chapter_beyond_duration(self):
        chapters = [{"start_sec": 0.0, "title": ""}, {"start_sec": 61.0, "title": ""}]
        with pytest.raises(ManifestError, match=r"chapters\[1\].start_sec"):
            parse_manifest(_manifest(chapters=chapters))

    def test_missing_field_names_path(self):
        doc = dict(MINIMAL)
        del doc["duration_sec"]
        with pytest.raises(ManifestError, match="duration_sec: missing"):
            parse_manifest(json.dumps(doc))

    def test_malformed_json(self):
        with pytest.raises(ManifestError, match="not valid JSON"):
            parse_manifest("{nope")

    def test_bad_language(self):
        with pytest.raises(ManifestError, match="language"):
            parse_manifest(_manifest(language="english"))

    def test_bad_audio_extension(self):
        with pytest.raises(ManifestError, match="audio_path"):
            parse_manifest(_manifest(audio_path="clip.mp3"))

    def test_realistic_eight_chapter_record(self):
        # a broadcast bulletin shape: ~14 min, 8 chapters (~7 per recording is typical)
        starts = [0.0, 95.0, 201.5, 318.0, 402.0, 516.5, 640.0, 762.0]
        chapters = [
            {"start_sec": s, "title": f"story {i}"} for i, s in enumerate(starts)
        ]
        m = parse_manifest(
            _manifest(
                id="en-2024-03-01",
                duration_sec=845.0,
                audio_path="audio/en-2024-03-01.wav",
                chapters=chapters,
            )
        )
        assert len(m.chapters) == 8
        assert 5 <= len(m.chapters) <= 12

    def test_round_trip(self):
        rng = np.random.default_rng(60)
        for _ in range(25):
            n_ch = int(rng.integers(1, 9))
            starts = np.sort(rng.uniform(0.5, 500.0, size=n_ch - 1)) if n_ch > 1 else []
            chapters = [{"start_sec": 0.0, "title": "intro"}] + [
                {"start_sec": float(s), "title": f"c{i}"} for i, s in enumerate(starts)
            ]
            text = _manifest(duration_sec=501.0, chapters=chapters)
            m = parse_manifest(text)
            again = parse_manifest(json.dumps(manifest_to_json(m)))
            assert again == m


class TestSegmentationType:
    def test_gap_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            Segmentation(n_units=4, boundaries=frozenset({4}))

    def test_segment_count(self):
        seg = Segmentation(n_units=9, boundaries=frozenset({3, 6}))
        assert seg.n_segments == 3

    def test_interchange_round_trip(self):
        seg = Segmentation(n_units=7, boundaries=frozenset({2, 5}))
        assert parse_segmentation(json.dumps(segmentation_to_json(seg))) == seg


class TestMakeBlocks:
    def test_exact_single_window(self):
        assert make_blocks(10.0, 10.0).spans == ((0.0, 10.0),)

    def test_tail_kept(self):
        tl = make_blocks(95.0, 10.0)
        assert tl.n_blocks == 10
        assert tl.spans[:9] == tuple((i * 10.0, (i + 1) * 10.0) for i in range(9))
        assert tl.spans[9] == (90.0, 95.0)

    def test_tail_dropped(self):
        tl = make_blocks(91.0, 10.0)
        assert tl.n_blocks == 9
        assert tl.end_sec == 90.0

    def test_too_short(self):
        with pytest.raises(ValueError, match="too short"):
            make_blocks(1.5, 10.0, min_tail_sec=2.0)

    def test_tiling_property(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            duration = float(rng.uniform(2.0, 900.0))
            window = float(rng.uniform(1.0, 30.0))
            if duration < 2.0:
                continue
            tl = make_blocks(duration, window, min_tail_sec=2.0)
            spans = tl.spans
            assert spans[0][0] == 0.0
            for a, b in zip(spans, spans[1:]):
                assert a[1] == b[0]
            for s, e in spans[:-1]:
                assert e - s == pytest.approx(window, rel=1e-12)
            last = spans[-1][1] - spans[-1][0]
            assert 0 < last <= window * (1 + 1e-12)
            assert duration - window < tl.end_sec <= duration


class TestDeriveLabels:
    def test_single_chapter(self):
        m = parse_manifest(_manifest(duration_sec=90.0))
        assert derive_labels(make_blocks(90.0), m).boundaries == frozenset()

    def test_three_chapters(self):
        chapters = [{"start_sec": s, "title": ""} for s in (0.0, 30.0, 60.0)]
        m = parse_manifest(_manifest(duration_sec=90.0, chapters=chapters))
        seg = derive_labels(make_blocks(90.0), m)
        assert seg.n_units == 9
        assert seg.boundaries == frozenset({3, 6})

    def test_midpoint_rule_inside_block(self):
        # chapter starts at 34.0: block 4 spans 30-40, midpoint 35 is past 34
        chapters = [{"start_sec": 0.0, "title": ""}, {"start_sec": 34.0, "title": ""}]
        m = parse_manifest(_manifest(duration_sec=80.0, chapters=chapters))
        seg = derive_labels(make_blocks(80.0), m)
        assert seg.boundaries == frozenset({3})

    def test_empty_timeline(self):
        m = parse_manifest(_manifest(duration_sec=90.0))
        from segtopics.corpus import BlockTimeline

        with pytest.raises(ValueError, match="empty"):
            derive_labels(BlockTimeline(spans=()), m)

    def test_at_most_chapter_transitions(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            duration = float(rng.uniform(30.0, 400.0))
            n_ch = int(rng.integers(1, 10))
            starts = sorted(float(s) for s in rng.uniform(0.1, duration - 0.1, size=n_ch - 1))
            chapters = [{"start_sec": 0.0, "title": ""}] + [
                {"start_sec": s, "title": ""} for s in starts
            ]
            try:
                m = parse_manifest(_manifest(duration_sec=duration, chapters=chapters))
            except ManifestError:
                continue  # rare duplicate draws
            seg = derive_labels(make_blocks(duration), m)
            assert len(seg.boundaries) <= len(m.chapters) - 1


def _manifests_with_dates(n):
    out = []
    for i in range(n):
        out.append(
            RecordingManifest(
                id=f"r{i:03d}",
                language="en",
                date=f"2024-{(i % 12) + 1:02d}-{(i % 28) + 1:02d}",
                duration_sec=60.0,
                audio_path=None,
                chapters=(Chapter(0.0, ""),),
            )
        )
    return out


class TestSplitCorpus:
    def test_hundred(self):
        split = split_corpus(_manifests_with_dates(100))
        assert (len(split.train), len(split.dev), len(split.test)) == (90, 5, 5)

    def test_three(self):
        split = split_corpus(_manifests_with_dates(3))
        assert (len(split.train), len(split.dev), len(split.test)) == (1, 1, 1)

    def test_twenty(self):
        split = split_corpus(_manifests_with_dates(20))
        assert (len(split.train), len(split.dev), len(split.test)) == (18, 1, 1)

    def test_too_few(self):
        with pytest.raises(ValueError, match="at least 3"):
            split_corpus(_manifests_with_dates(2))

    def test_deterministic_under_shuffle(self):
        manifests = _manifests_with_dates(37)
        split_a = split_corpus(manifests)
        rng = np.random.default_rng(5)
        shuffled = [manifests[i] for i in rng.permutation(len(manifests))]
        assert split_corpus(shuffled) == split_a

    def test_partition_property(self):
        manifests = _manifests_with_dates(41)
        split = split_corpus(manifests)
        parts = [set(split.train), set(split.dev), set(split.test)]
        assert parts[0] | parts[1] | parts[2] == {m.id for m in manifests}
        assert not (parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2])

    def test_chronological_order(self):
        manifests = _manifests_with_dates(10)
        split = split_corpus(manifests)
        ordered = sorted(manifests, key=lambda m: (m.date, m.id))
        assert list(split.train) == [m.id for m in ordered[: len(split.train)]]


def test_round_half_up():
    assert round_half_up(1.5) == 2
    assert round_half_up(2.5) == 3
    assert round_half_up(2.49) == 2
    assert round_half_up(3.0) == 3
