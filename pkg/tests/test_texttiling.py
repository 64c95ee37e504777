import math

import numpy as np
import pytest

from segtopics.synth import synth_text
from segtopics.texttiling import (
    GapScores,
    assign_boundaries,
    block_similarity,
    build_token_sequences,
    depth_scores,
    smooth,
    texttile,
    tokenize,
)


def climb_depth_reference(sims):
    """Independent re-statement of the depth definition for cross-checking."""
    sims = list(sims)
    out = []
    for g, s in enumerate(sims):
        left = sims[:g][::-1]
        lpeak = s
        for v in left:
            if v >= lpeak:
                lpeak = v
            else:
                break
        rpeak = s
        for v in sims[g + 1 :]:
            if v >= rpeak:
                rpeak = v
            else:
                break
        out.append(max(0.0, lpeak + rpeak - 2 * s))
    return out


class TestTokenize:
    def test_punctuation(self):
        assert tokenize("The cat, the cat.") == ["the", "cat", "the", "cat"]

    def test_empty(self):
        assert tokenize("") == []

    def test_unicode_and_digits(self):
        assert tokenize("über-Fall 2024") == ["über", "fall", "2024"]

    def test_underscore_separates(self):
        assert tokenize("a_b") == ["a", "b"]


class TestBuildTokenSequences:
    def test_exact_multiple(self):
        stream = build_token_sequences(["x"] * 40, w=20)
        assert stream.n_sequences == 2
        assert stream.w == 20

    def test_partial_dropped(self):
        assert build_token_sequences(["x"] * 41, w=20).n_sequences == 2

    def test_too_few(self):
        assert build_token_sequences(["x"] * 19, w=20).n_sequences == 0


def _stream_from_seqs(seqs):
    tokens = [t for s in seqs for t in s]
    return build_token_sequences(tokens, w=len(seqs[0]))


class TestBlockSimilarity:
    def test_identical_blocks(self):
        stream = _stream_from_seqs([["a", "b", "c"], ["a", "b", "c"]])
        sims = block_similarity(stream, blocksize=1)
        assert sims.values == pytest.approx([1.0])

    def test_disjoint_vocab(self):
        stream = _stream_from_seqs([["a", "a", "a"], ["b", "b", "b"]])
        assert block_similarity(stream, blocksize=1).values == pytest.approx([0.0])

    def test_hand_computed_cosine(self):
        # counts (2,1,0) vs (1,1,1): 3 / sqrt(5*3)
        stream = _stream_from_seqs([["a", "a", "b"], ["a", "b", "c"]])
        sims = block_similarity(stream, blocksize=1)
        assert sims.values == pytest.approx([3.0 / math.sqrt(15.0)])
        assert sims.values == pytest.approx([0.7745966692414834])

    def test_requires_two_sequences(self):
        stream = build_token_sequences(["a"] * 5, w=5)
        with pytest.raises(ValueError, match="at least 2"):
            block_similarity(stream)

    def test_symmetry_under_reversal(self):
        rng = np.random.default_rng(4)
        tokens = [f"w{t}" for t in rng.integers(0, 30, size=200)]
        stream = build_token_sequences(tokens, w=10)
        fwd = block_similarity(stream, blocksize=3).values
        rev = block_similarity(
            build_token_sequences(tokens[::-1], w=10), blocksize=3
        ).values
        assert fwd == pytest.approx(rev[::-1])

    def test_count_scaling_invariance(self):
        # tripling every token count scales both block vectors; cosine unchanged
        from segtopics._kernels import gap_cosines

        rng = np.random.default_rng(5)
        counts = rng.integers(0, 5, size=(8, 12)).astype(np.int64)
        a = gap_cosines(counts, 4)
        b = gap_cosines(counts * 3, 4)
        assert a == pytest.approx(b, abs=1e-15)

    def test_values_in_unit_interval(self):
        rng = np.random.default_rng(6)
        tokens = [f"w{t}" for t in rng.integers(0, 10, size=400)]
        sims = block_similarity(build_token_sequences(tokens, w=8)).values
        assert np.all(sims >= 0.0) and np.all(sims <= 1.0)


class TestSmooth:
    def test_constant_unchanged(self):
        scores = GapScores(np.full(7, 0.4), "similarity")
        assert smooth(scores, width=2).values == pytest.approx([0.4] * 7)

    def test_hand_computed_edges(self):
        scores = GapScores(np.array([0.0, 1.0, 0.0]), "similarity")
        assert smooth(scores, width=1).values == pytest.approx([0.5, 1 / 3, 0.5])

    def test_zero_rounds_identity(self):
        vals = np.array([0.3, 0.9, 0.1])
        out = smooth(GapScores(vals, "similarity"), width=2, rounds=0)
        assert np.array_equal(out.values, vals)

    def test_range_never_widens(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            vals = rng.uniform(-3, 3, size=int(rng.integers(1, 30)))
            out = smooth(
                GapScores(vals, "similarity"),
                width=int(rng.integers(1, 4)),
                rounds=int(rng.integers(1, 4)),
            ).values
            assert out.min() >= vals.min() - 1e-12
            assert out.max() <= vals.max() + 1e-12


class TestDepthScores:
    def test_hand_valley(self):
        d = depth_scores(GapScores(np.array([0.8, 0.2, 0.8]), "similarity"))
        assert d.values == pytest.approx([0.0, 1.2, 0.0])

    def test_plateau(self):
        d = depth_scores(GapScores(np.full(3, 0.5), "similarity"))
        assert d.values == pytest.approx([0.0, 0.0, 0.0])

    def test_monotone_increasing_zero_at_the_peak_end(self):
        sims = np.linspace(0.1, 0.9, 8)
        d = depth_scores(GapScores(sims, "similarity")).values
        assert d[-1] == 0.0
        assert np.array_equal(d, climb_depth_reference(sims))

    def test_matches_reference_on_random_sequences(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            sims = rng.uniform(0, 1, size=int(rng.integers(1, 40)))
            got = depth_scores(GapScores(sims, "similarity")).values
            assert got == pytest.approx(climb_depth_reference(sims), abs=1e-15)

    def test_nonnegative_and_zero_at_global_max(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            sims = rng.uniform(0, 1, size=int(rng.integers(2, 40)))
            d = depth_scores(GapScores(sims, "similarity")).values
            assert np.all(d >= 0.0)
            assert d[np.argmax(sims)] == 0.0

    def test_requires_similarity_kind(self):
        with pytest.raises(ValueError, match="similarity"):
            depth_scores(GapScores(np.array([0.1]), "depth"))


class TestAssignBoundaries:
    def test_hand_computed_cutoff(self):
        seg = assign_boundaries(GapScores(np.array([1.2, 0.0, 0.0]), "depth"))
        assert seg.n_units == 4
        assert seg.boundaries == frozenset({1})

    def test_all_equal_no_boundaries(self):
        seg = assign_boundaries(GapScores(np.full(5, 0.7), "depth"))
        assert seg.boundaries == frozenset()

    def test_single_gap_strict_inequality(self):
        seg = assign_boundaries(GapScores(np.array([1.0]), "depth"))
        assert seg.boundaries == frozenset()


class TestTexttile:
    def test_recovers_planted_junction(self):
        hits = 0
        for seed in range(20):
            text, truth = synth_text(
                seed=seed, tokens_per_topic=400, n_topics=2, vocab_size_per_topic=50
            )
            seg = texttile(text)
            assert seg.n_units == truth.n_units
            true_b = next(iter(truth.boundaries))
            if any(abs(b - true_b) <= 2 for b in seg.boundaries):
                hits += 1
        assert hits == 20

    def test_dominant_valley_at_junction(self):
        for seed in range(10):
            text, truth = synth_text(
                seed=seed, tokens_per_topic=400, n_topics=2, vocab_size_per_topic=50
            )
            stream = build_token_sequences(tokenize(text))
            d = depth_scores(smooth(block_similarity(stream))).values
            true_b = next(iter(truth.boundaries))
            assert abs(int(np.argmax(d)) + 1 - true_b) <= 2

    def test_single_vocabulary_weak_signal(self):
        # no planted boundary: the deepest valley stays well below a real junction's
        for seed in range(10):
            one, _ = synth_text(
                seed=seed, tokens_per_topic=800, n_topics=1, vocab_size_per_topic=50
            )
            two, _ = synth_text(
                seed=seed, tokens_per_topic=400, n_topics=2, vocab_size_per_topic=50
            )
            def max_depth(text):
                stream = build_token_sequences(tokenize(text))
                return depth_scores(smooth(block_similarity(stream))).values.max()

            assert max_depth(one) < 0.5 * max_depth(two)

    def test_empty_text_errors(self):
        with pytest.raises(ValueError, match="too short"):
            texttile("")

    def test_short_text_errors(self):
        with pytest.raises(ValueError, match="too short"):
            texttile("one two three")
