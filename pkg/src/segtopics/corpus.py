"""Corpus ingestion: chapter manifests, block timelines, boundary labels, splits.

Everything here is a pure function over immutable values; the only I/O helpers
are thin JSON (de)serializers for the manifest schema.
"""

from __future__ import annotations

import datetime
import json
import math
import re
from bisect import bisect_right
from dataclasses import dataclass, field


class ManifestError(ValueError):
    """Manifest document failed validation; message starts with the field path."""


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves away from zero toward +inf (1.5 -> 2)."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Chapter:
    start_sec: float
    title: str = ""

    def __post_init__(self):
        if not math.isfinite(self.start_sec) or self.start_sec < 0:
            raise ManifestError("start_sec: must be finite and >= 0")


@dataclass(frozen=True)
class RecordingManifest:
    """One chapter-annotated recording. `date` is the chronological split key."""

    id: str
    language: str
    date: str
    duration_sec: float
    audio_path: str | None
    chapters: tuple[Chapter, ...]

    def __post_init__(self):
        if not self.chapters:
            raise ManifestError("chapters: must be non-empty")
        if self.chapters[0].start_sec != 0.0:
            raise ManifestError("chapters[0].start_sec: first chapter must start at 0.0")
        for i in range(1, len(self.chapters)):
            if not self.chapters[i].start_sec > self.chapters[i - 1].start_sec:
                raise ManifestError(
                    f"chapters[{i}].start_sec: chapters not strictly increasing"
                )
        for i, ch in enumerate(self.chapters):
            if not ch.start_sec < self.duration_sec:
                raise ManifestError(
                    f"chapters[{i}].start_sec: must be < duration_sec"
                )


@dataclass(frozen=True)
class BlockTimeline:
    """Contiguous block spans tiling [0, duration_used]."""

    spans: tuple[tuple[float, float], ...]

    @property
    def n_blocks(self) -> int:
        return len(self.spans)

    @property
    def end_sec(self) -> float:
        return self.spans[-1][1] if self.spans else 0.0


@dataclass(frozen=True)
class Segmentation:
    """`n_units` blocks and the set of boundary gaps; gap g separates unit g and g+1."""

    n_units: int
    boundaries: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n_units < 1:
            raise ValueError("n_units must be positive")
        object.__setattr__(self, "boundaries", frozenset(self.boundaries))
        for g in self.boundaries:
            if not 1 <= g <= self.n_units - 1:
                raise ValueError(
                    f"boundary gap {g} out of range 1..{self.n_units - 1}"
                )

    @property
    def n_segments(self) -> int:
        return len(self.boundaries) + 1


@dataclass(frozen=True)
class CorpusSplit:
    train: tuple[str, ...]
    dev: tuple[str, ...]
    test: tuple[str, ...]


_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_LANG_RE = re.compile(r"^[a-z]{2}$")


def _require(doc: dict, name: str, kind, path: str = ""):
    where = f"{path}{name}"
    if name not in doc:
        raise ManifestError(f"{where}: missing required field")
    value = doc[name]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ManifestError(f"{where}: expected a number")
        return float(value)
    if not isinstance(value, kind):
        raise ManifestError(f"{where}: expected {kind.__name__}")
    return value


def parse_manifest(text: str) -> RecordingManifest:
    """Parse and validate one manifest JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ManifestError(f"document: not valid JSON ({e.msg} at char {e.pos})") from e
    if not isinstance(doc, dict):
        raise ManifestError("document: expected a JSON object")

    rec_id = _require(doc, "id", str)
    if not rec_id:
        raise ManifestError("id: must be non-empty")
    language = _require(doc, "language", str)
    if not _LANG_RE.match(language):
        raise ManifestError("language: expected ISO 639-1 two-letter code")
    date = _require(doc, "date", str)
    if not _DATE_RE.match(date):
        raise ManifestError("date: expected YYYY-MM-DD")
    try:
        datetime.date.fromisoformat(date)
    except ValueError:
        raise ManifestError("date: not a real calendar date") from None
    duration = _require(doc, "duration_sec", float)
    if not math.isfinite(duration) or duration < 0:
        raise ManifestError("duration_sec: must be finite and >= 0")

    audio_path = doc.get("audio_path")
    if audio_path is not None:
        if not isinstance(audio_path, str):
            raise ManifestError("audio_path: expected string or null")
        if not audio_path.lower().endswith(".wav"):
            raise ManifestError("audio_path: expected a .wav path or null")

    raw_chapters = _require(doc, "chapters", list)
    if not raw_chapters:
        raise ManifestError("chapters: must be non-empty")
    chapters = []
    for i, entry in enumerate(raw_chapters):
        if not isinstance(entry, dict):
            raise ManifestError(f"chapters[{i}]: expected an object")
        start = _require(entry, "start_sec", float, path=f"chapters[{i}].")
        title = entry.get("title", "")
        if not isinstance(title, str):
            raise ManifestError(f"chapters[{i}].title: expected string")
        try:
            chapters.append(Chapter(start_sec=start, title=title))
        except ManifestError as e:
            raise ManifestError(f"chapters[{i}].{e}") from None

    return RecordingManifest(
        id=rec_id,
        language=language,
        date=date,
        duration_sec=duration,
        audio_path=audio_path,
        chapters=tuple(chapters),
    )


def manifest_to_json(manifest: RecordingManifest) -> dict:
    return {
        "id": manifest.id,
        "language": manifest.language,
        "date": manifest.date,
        "duration_sec": manifest.duration_sec,
        "audio_path": manifest.audio_path,
        "chapters": [
            {"start_sec": c.start_sec, "title": c.title} for c in manifest.chapters
        ],
    }


def segmentation_to_json(seg: Segmentation) -> dict:
    return {"n_units": seg.n_units, "boundaries": sorted(seg.boundaries)}


def parse_segmentation(text: str) -> Segmentation:
    """Parse the {"n_units": int, "boundaries": [int, ...]} interchange form."""
    doc = json.loads(text)
    if not isinstance(doc, dict) or "n_units" not in doc:
        raise ValueError("segmentation file: expected {\"n_units\":..., \"boundaries\":[...]}")
    return Segmentation(
        n_units=int(doc["n_units"]),
        boundaries=frozenset(int(b) for b in doc.get("boundaries", [])),
    )


def make_blocks(
    duration_sec: float, window_sec: float = 10.0, min_tail_sec: float = 2.0
) -> BlockTimeline:
    """Tile a recording into fixed windows; keep the tail only if >= min_tail_sec."""
    if window_sec <= 0:
        raise ValueError("window_sec must be > 0")
    if duration_sec < min_tail_sec:
        raise ValueError(
            f"recording too short: {duration_sec} s < min tail {min_tail_sec} s"
        )
    n_full = int(math.floor(duration_sec / window_sec))
    spans = [(i * window_sec, (i + 1) * window_sec) for i in range(n_full)]
    tail = duration_sec - n_full * window_sec
    if tail >= min_tail_sec:
        spans.append((n_full * window_sec, duration_sec))
    if not spans:
        raise ValueError("recording too short: no usable blocks")
    return BlockTimeline(spans=tuple(spans))


def derive_labels(timeline: BlockTimeline, manifest: RecordingManifest) -> Segmentation:
    """Boundary at gap g iff the chapters holding the midpoints of blocks g and g+1 differ."""
    if not timeline.spans:
        raise ValueError("empty timeline")
    starts = [c.start_sec for c in manifest.chapters]
    owner = [
        bisect_right(starts, (s + e) / 2.0) - 1 for s, e in timeline.spans
    ]
    boundaries = frozenset(
        g for g in range(1, len(owner)) if owner[g - 1] != owner[g]
    )
    return Segmentation(n_units=len(owner), boundaries=boundaries)


def split_corpus(
    manifests: list[RecordingManifest],
    ratios: tuple[float, float, float] = (0.90, 0.05, 0.05),
) -> CorpusSplit:
    """Chronological train/dev/test split; deterministic for any input order."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    n = len(manifests)
    if n < 3:
        raise ValueError(f"need at least 3 recordings to split, got {n}")
    ids = [m.id for m in manifests]
    if len(set(ids)) != n:
        raise ValueError("duplicate recording ids")
    ordered = sorted(manifests, key=lambda m: (m.date, m.id))

    n_train = round_half_up(ratios[0] * n)
    n_dev = round_half_up(ratios[1] * n)
    n_test = n - n_train - n_dev
    # every split non-empty when n >= 3; shortfall comes out of train
    if n_dev < 1:
        n_dev = 1
    if n_test < 1:
        n_test = 1
    n_train = n - n_dev - n_test

    ordered_ids = [m.id for m in ordered]
    return CorpusSplit(
        train=tuple(ordered_ids[:n_train]),
        dev=tuple(ordered_ids[n_train : n_train + n_dev]),
        test=tuple(ordered_ids[n_train + n_dev :]),
    )
