"""Evaluation suite: Pk, WinDiff, segmentation purity/coverage, SPCF.

Window conventions (normative for this package): windows index i = 1..N-k and
cover gaps i..i+k-1; two units i and i+k are in the same segment iff no
boundary falls in that gap range; WinDiff compares in-window boundary counts
with a strict-positive disagreement test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import sliding_window_counts
from .corpus import BlockTimeline, Segmentation, round_half_up


@dataclass(frozen=True)
class TimedSegmentation:
    """Contiguous timed segments tiling [0, extent]; all lengths > 0."""

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("segments must be non-empty")
        if self.segments[0][0] != 0.0:
            raise ValueError("first segment must start at 0")
        prev_end = 0.0
        for i, (s, e) in enumerate(self.segments):
            if s != prev_end:
                raise ValueError(f"segments[{i}] starts at {s}, expected {prev_end}")
            if not e > s:
                raise ValueError(f"segments[{i}] has non-positive length")
            prev_end = e

    @property
    def extent(self) -> float:
        return self.segments[-1][1]


@dataclass(frozen=True)
class MetricReport:
    pk: float
    windiff: float
    purity: float
    coverage: float
    spcf: float
    k_used: int
    n_units: int

    def to_json(self) -> dict:
        return {
            "pk": self.pk,
            "windiff": self.windiff,
            "purity": self.purity,
            "coverage": self.coverage,
            "spcf": self.spcf,
            "k": self.k_used,
            "n_units": self.n_units,
        }


def _boundary_indicator(seg: Segmentation) -> np.ndarray:
    ind = np.zeros(seg.n_units - 1, dtype=np.int64)
    for g in seg.boundaries:
        ind[g - 1] = 1
    return ind


def compute_k(ref: Segmentation) -> int:
    """Half the mean reference segment length, rounded half-up, floored at 1."""
    if ref.n_units < 2:
        raise ValueError("need at least 2 units to choose k")
    mean_len = ref.n_units / (len(ref.boundaries) + 1)
    return max(1, round_half_up(mean_len / 2.0))


def _check_pair(ref: Segmentation, hyp: Segmentation, k: int) -> int:
    if ref.n_units != hyp.n_units:
        raise ValueError(
            f"unit count mismatch: ref {ref.n_units} vs hyp {hyp.n_units}"
        )
    n = ref.n_units
    if not 1 <= k < n:
        raise ValueError(f"k={k} out of range 1..{n - 1}")
    return n


def pk(ref: Segmentation, hyp: Segmentation, k: int) -> float:
    """Fraction of width-k windows misclassified as same/different segment."""
    n = _check_pair(ref, hyp, k)
    ref_counts = sliding_window_counts(_boundary_indicator(ref), k)
    hyp_counts = sliding_window_counts(_boundary_indicator(hyp), k)
    disagreements = int(np.count_nonzero((ref_counts == 0) != (hyp_counts == 0)))
    return disagreements / (n - k)


def windiff(ref: Segmentation, hyp: Segmentation, k: int) -> float:
    """Fraction of width-k windows whose boundary counts differ."""
    n = _check_pair(ref, hyp, k)
    ref_counts = sliding_window_counts(_boundary_indicator(ref), k)
    hyp_counts = sliding_window_counts(_boundary_indicator(hyp), k)
    disagreements = int(np.count_nonzero(ref_counts != hyp_counts))
    return disagreements / (n - k)


def _overlap(a: tuple[float, float], b: tuple[float, float]) -> float:
    return max(0.0, min(a[1], b[1]) - max(a[0], b[0]))


def purity_coverage(
    ref: TimedSegmentation, hyp: TimedSegmentation
) -> tuple[float, float]:
    """Duration-weighted best-overlap fractions.

    Purity aggregates, over hypothesis segments, the largest overlap with any
    single reference segment; coverage is the dual. Extents must agree within
    1e-6 s.
    """
    if abs(ref.extent - hyp.extent) > 1e-6:
        raise ValueError(
            f"extent mismatch: ref {ref.extent} s vs hyp {hyp.extent} s"
        )
    purity = (
        sum(max(_overlap(h, r) for r in ref.segments) for h in hyp.segments)
        / hyp.extent
    )
    coverage = (
        sum(max(_overlap(r, h) for h in hyp.segments) for r in ref.segments)
        / ref.extent
    )
    return purity, coverage


def spcf(purity: float, coverage: float) -> float:
    """Harmonic mean of purity and coverage; 0 when both are 0."""
    if purity == 0.0 and coverage == 0.0:
        return 0.0
    return 2.0 * purity * coverage / (purity + coverage)


def labels_to_timed(seg: Segmentation, timeline: BlockTimeline) -> TimedSegmentation:
    """Merge consecutive blocks between boundaries into timed segments."""
    if seg.n_units != timeline.n_blocks:
        raise ValueError(
            f"unit count mismatch: segmentation {seg.n_units} vs timeline "
            f"{timeline.n_blocks}"
        )
    cuts = sorted(seg.boundaries)
    segments = []
    start_block = 0
    for g in cuts + [seg.n_units]:
        segments.append((timeline.spans[start_block][0], timeline.spans[g - 1][1]))
        start_block = g
    return TimedSegmentation(segments=tuple(segments))


def unit_timeline(n_units: int) -> BlockTimeline:
    """Unit-length spans, for duration-weighting label-only segmentations."""
    return BlockTimeline(spans=tuple((float(i), float(i + 1)) for i in range(n_units)))


def evaluate(
    ref: Segmentation,
    hyp: Segmentation,
    timeline: BlockTimeline | None = None,
    k: int | None = None,
) -> MetricReport:
    """Full metric report for one recording."""
    if k is None:
        k = compute_k(ref)
    if timeline is None:
        timeline = unit_timeline(ref.n_units)
    p, c = purity_coverage(labels_to_timed(ref, timeline), labels_to_timed(hyp, timeline))
    return MetricReport(
        pk=pk(ref, hyp, k),
        windiff=windiff(ref, hyp, k),
        purity=p,
        coverage=c,
        spcf=spcf(p, c),
        k_used=k,
        n_units=ref.n_units,
    )
