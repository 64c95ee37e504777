"""TextTiling baseline: lexical block cosine, smoothing, depth scores, threshold.

Vanilla variant: no stopword filtering, no stemming, so the algorithm stays
language-agnostic. Units of the returned segmentation are token sequences.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ._kernels import depth_scores_kernel, gap_cosines
from .corpus import Segmentation

# Unicode alphanumeric runs; underscore is a separator like any other punctuation.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

SCORE_KINDS = ("similarity", "depth", "probability")


@dataclass(frozen=True)
class GapScores:
    """One real score per gap g in 1..G (values[g-1] scores gap g)."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in SCORE_KINDS:
            raise ValueError(f"unknown score kind {self.kind!r}")
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=np.float64)
        )

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TokenSequenceStream:
    """Fixed-length token sequences as vocab indices, (n_seq, w) int32."""

    sequences: np.ndarray
    vocab: dict[str, int]

    @property
    def n_sequences(self) -> int:
        return self.sequences.shape[0]

    @property
    def w(self) -> int:
        return self.sequences.shape[1]


def tokenize(text: str) -> list[str]:
    """Lowercased Unicode-alphanumeric runs; everything else separates."""
    return _TOKEN_RE.findall(text.lower())


def build_token_sequences(tokens: list[str], w: int = 20) -> TokenSequenceStream:
    """Group tokens into floor(len/w) sequences of exactly w; tail discarded."""
    if w < 1:
        raise ValueError("w must be >= 1")
    vocab: dict[str, int] = {}
    n_seq = len(tokens) // w
    ids = np.empty(n_seq * w, dtype=np.int32)
    for i, tok in enumerate(tokens[: n_seq * w]):
        idx = vocab.get(tok)
        if idx is None:
            idx = len(vocab)
            vocab[tok] = idx
        ids[i] = idx
    return TokenSequenceStream(sequences=ids.reshape(n_seq, w), vocab=vocab)


def _count_matrix(stream: TokenSequenceStream) -> np.ndarray:
    counts = np.zeros((stream.n_sequences, max(1, len(stream.vocab))), np.int64)
    rows = np.repeat(np.arange(stream.n_sequences), stream.w)
    np.add.at(counts, (rows, stream.sequences.ravel()), 1)
    return counts


def block_similarity(stream: TokenSequenceStream, blocksize: int = 10) -> GapScores:
    """Cosine of token-count vectors of the blocks flanking each gap.

    Blocks take up to `blocksize` token sequences on each side, clipped at
    the text edges; a zero-norm side yields similarity 0.
    """
    if stream.n_sequences < 2:
        raise ValueError(
            f"need at least 2 token sequences, got {stream.n_sequences}"
        )
    if blocksize < 1:
        raise ValueError("blocksize must be >= 1")
    sims = gap_cosines(_count_matrix(stream), blocksize)
    return GapScores(values=sims, kind="similarity")


def smooth(scores: GapScores, width: int = 2, rounds: int = 1) -> GapScores:
    """Moving average, each value with up to `width` neighbors per side."""
    if width < 1:
        raise ValueError("width must be >= 1")
    vals = scores.values
    n = len(vals)
    idx = np.arange(n)
    lo = np.maximum(0, idx - width)
    hi = np.minimum(n, idx + width + 1)
    for _ in range(rounds):
        c = np.concatenate(([0.0], np.cumsum(vals)))
        vals = (c[hi] - c[lo]) / (hi - lo)
    return GapScores(values=vals, kind=scores.kind)


def depth_scores(similarities: GapScores) -> GapScores:
    """Valley depth per gap: flanking-peak similarity sum minus twice the gap's.

    Peaks are found by climbing away from the gap while values do not descend
    (ties continue the climb); at the sequence edges the gap's own value
    stands in for the missing side. Clamped at zero.
    """
    if similarities.kind != "similarity":
        raise ValueError(f"expected similarity scores, got {similarities.kind!r}")
    return GapScores(values=depth_scores_kernel(similarities.values), kind="depth")


def assign_boundaries(depths: GapScores) -> Segmentation:
    """Boundary at every gap with depth strictly above mean - stddev/2."""
    if depths.kind != "depth":
        raise ValueError(f"expected depth scores, got {depths.kind!r}")
    if len(depths) < 1:
        raise ValueError("need at least one gap")
    vals = depths.values
    cutoff = float(np.mean(vals)) - float(np.std(vals)) / 2.0
    boundaries = frozenset(int(g + 1) for g in np.flatnonzero(vals > cutoff))
    return Segmentation(n_units=len(vals) + 1, boundaries=boundaries)


def texttile(
    text: str,
    w: int = 20,
    blocksize: int = 10,
    smooth_width: int = 2,
    smooth_rounds: int = 1,
) -> Segmentation:
    """Full TextTiling pass over a transcript; units are token sequences."""
    stream = build_token_sequences(tokenize(text), w=w)
    if stream.n_sequences < 2:
        raise ValueError(
            f"text too short: {stream.n_sequences} token sequence(s) at w={w}, need 2"
        )
    sims = block_similarity(stream, blocksize=blocksize)
    smoothed = smooth(sims, width=smooth_width, rounds=smooth_rounds)
    return assign_boundaries(depth_scores(smoothed))
