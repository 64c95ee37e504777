"""Deterministic synthetic corpora with planted ground truth.

Two generators: disjoint-vocabulary text for the TextTiling oracle, and
Gaussian-cluster block-embedding recordings for the segmentation head. Given
the same spec and seed the output is bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import BlockTimeline, Segmentation, make_blocks, round_half_up
from .embedio import BlockEmbeddingSequence

SynthRecord = tuple[BlockEmbeddingSequence, Segmentation, BlockTimeline]


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    n_recordings: int
    blocks_per_recording: tuple[int, int]
    topics_per_recording: tuple[int, int]
    d: int
    cluster_separation: float
    noise_sigma: float
    window_sec: float = 10.0

    def __post_init__(self):
        if self.cluster_separation <= 0:
            raise ValueError("cluster_separation must be > 0")
        if self.noise_sigma <= 0:
            raise ValueError("noise_sigma must be > 0")
        b_lo, b_hi = self.blocks_per_recording
        t_lo, t_hi = self.topics_per_recording
        if not (1 <= b_lo <= b_hi) or not (1 <= t_lo <= t_hi):
            raise ValueError("empty blocks/topics range")
        if b_lo <= t_hi:
            raise ValueError("blocks range must exceed topics range")
        if self.d < 1:
            raise ValueError("d must be positive")
        if self.n_recordings < 1:
            raise ValueError("n_recordings must be positive")


def synth_text(
    seed: int,
    tokens_per_topic: int,
    n_topics: int,
    vocab_size_per_topic: int,
    w: int = 20,
) -> tuple[str, Segmentation]:
    """Topics sample uniformly from disjoint vocabularies; truth gaps at junctions.

    The returned segmentation is in token-sequence units for the given w.
    """
    if min(tokens_per_topic, n_topics, vocab_size_per_topic, w) < 1:
        raise ValueError("all arguments must be positive")
    rng = np.random.default_rng(seed)
    words = []
    for t in range(n_topics):
        vocab = [f"t{t:02d}w{j:04d}" for j in range(vocab_size_per_topic)]
        draws = rng.integers(0, vocab_size_per_topic, size=tokens_per_topic)
        words.extend(vocab[j] for j in draws)
    n_units = (tokens_per_topic * n_topics) // w
    boundaries = set()
    for t in range(1, n_topics):
        gap = round_half_up(t * tokens_per_topic / w)
        if 1 <= gap <= n_units - 1:
            boundaries.add(gap)
    return " ".join(words), Segmentation(n_units=n_units, boundaries=frozenset(boundaries))


def _draw_centroids(rng: np.random.Generator, d: int, k: int, separation: float) -> np.ndarray:
    # i.i.d. coordinates with std separation/sqrt(2): E||c_a - c_b||^2 = d*separation^2,
    # so topic centroids sit ~sqrt(d)*separation apart, far beyond the noise scale.
    return rng.standard_normal((k, d)) * (separation / math.sqrt(2.0))


def synth_embeddings(spec: SynthSpec) -> list[SynthRecord]:
    """Planted-boundary recordings: Gaussian topic centroids (pairwise distance
    concentrating at sqrt(d) * cluster_separation), blocks are centroid +
    N(0, sigma^2 I), boundaries at the topic changes."""
    records = []
    for rec in range(spec.n_recordings):
        rng = np.random.default_rng([spec.seed, rec])
        n_topics = int(rng.integers(spec.topics_per_recording[0], spec.topics_per_recording[1] + 1))
        n_blocks = int(rng.integers(spec.blocks_per_recording[0], spec.blocks_per_recording[1] + 1))
        cuts = np.sort(rng.choice(np.arange(1, n_blocks), size=n_topics - 1, replace=False))
        centroids = _draw_centroids(rng, spec.d, n_topics, spec.cluster_separation)
        topic_of_block = np.zeros(n_blocks, dtype=np.int64)
        for cut in cuts:
            topic_of_block[cut:] += 1
        data = centroids[topic_of_block] + spec.noise_sigma * rng.standard_normal(
            (n_blocks, spec.d)
        )
        seg = Segmentation(n_units=n_blocks, boundaries=frozenset(int(c) for c in cuts))
        timeline = make_blocks(n_blocks * spec.window_sec, window_sec=spec.window_sec)
        records.append((BlockEmbeddingSequence(data.astype(np.float32)), seg, timeline))
    return records


def nearest_centroid_accuracy(spec: SynthSpec, n_samples: int = 4000) -> float:
    """Monte-Carlo check that the planted signal is strong enough to learn."""
    rng = np.random.default_rng(spec.seed or 1)
    n_topics = spec.topics_per_recording[1]
    centroids = _draw_centroids(rng, spec.d, n_topics, spec.cluster_separation)
    labels = rng.integers(0, n_topics, size=n_samples)
    x = centroids[labels] + spec.noise_sigma * rng.standard_normal((n_samples, spec.d))
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return float(np.mean(d2.argmin(axis=1) == labels))
