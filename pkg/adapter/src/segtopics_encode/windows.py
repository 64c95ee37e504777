"""Block windowing for speech input, matching the engine's tail policy:
non-overlapping fixed windows, trailing remainder kept iff >= min_tail_sec."""

from __future__ import annotations


def sample_spans(
    n_samples: int,
    sample_rate: int,
    window_sec: float = 10.0,
    min_tail_sec: float = 2.0,
) -> list[tuple[int, int]]:
    """Half-open sample index spans for each block."""
    if window_sec <= 0:
        raise ValueError("window_sec must be > 0")
    window = int(round(window_sec * sample_rate))
    min_tail = int(round(min_tail_sec * sample_rate))
    if n_samples < min_tail:
        raise ValueError(
            f"recording too short: {n_samples / sample_rate:.2f} s, "
            f"need at least {min_tail_sec} s"
        )
    full = n_samples // window
    spans = [(i * window, (i + 1) * window) for i in range(full)]
    tail = n_samples - full * window
    if tail >= min_tail:
        spans.append((full * window, n_samples))
    if not spans:
        raise ValueError("recording too short: no usable blocks")
    return spans
