"""Hot numeric kernels, numba-jitted with pure-numpy fallbacks.

Backend selection: `SEGTOPICS_NUMBA=0` (or `false`/`off`/`no`) forces the
numpy fallbacks; anything else uses numba when it imports. Both paths are
bit-identical: the window and count sums are integer-valued (exact in
float64/int64) and the scalar float expressions are evaluated in the same
order.

Kernels:
    sliding_window_counts(ind, k)  boundary counts per width-k gap window
    gap_cosines(counts, blocksize) TextTiling block cosine per gap
    depth_scores_kernel(sims)      valley depth per gap
"""

from __future__ import annotations

import os

import numpy as np


def _numba_enabled() -> bool:
    flag = os.environ.get("SEGTOPICS_NUMBA", "").strip().lower()
    if flag in {"0", "false", "off", "no"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


# ---------------------------------------------------------------------------
# numpy fallbacks

def _sliding_window_counts_np(ind: np.ndarray, k: int) -> np.ndarray:
    """ind: int64[G] 0/1 boundary indicators (gap g -> ind[g-1]). Returns
    int64[G-k+1] counts over windows of k consecutive gaps."""
    c = np.concatenate((np.zeros(1, np.int64), np.cumsum(ind, dtype=np.int64)))
    return c[k:] - c[:-k]


def _gap_cosines_np(counts: np.ndarray, blocksize: int) -> np.ndarray:
    """counts: int64[n_seq, V] token counts per token-sequence. Returns the
    cosine between left/right blocks of up to `blocksize` sequences at each
    of the n_seq-1 gaps; a zero-norm side gives 0."""
    n, _ = counts.shape
    prefix = np.vstack(
        (np.zeros((1, counts.shape[1]), np.int64), np.cumsum(counts, axis=0))
    )
    g = np.arange(1, n)
    lo = np.maximum(0, g - blocksize)
    hi = np.minimum(n, g + blocksize)
    left = prefix[g] - prefix[lo]
    right = prefix[hi] - prefix[g]
    dot = np.einsum("gv,gv->g", left, right).astype(np.float64)
    n1 = np.einsum("gv,gv->g", left, left).astype(np.float64)
    n2 = np.einsum("gv,gv->g", right, right).astype(np.float64)
    sims = np.zeros(n - 1, np.float64)
    ok = (n1 > 0) & (n2 > 0)
    sims[ok] = dot[ok] / np.sqrt(n1[ok] * n2[ok])
    return sims


def _depth_scores_loop(sims: np.ndarray) -> np.ndarray:
    """Climb outward from each gap to the flanking peaks (ties continue the
    climb); depth = lpeak + rpeak - 2*sim, clamped at zero."""
    n = sims.shape[0]
    out = np.zeros(n, np.float64)
    for g in range(n):
        lpeak = sims[g]
        i = g - 1
        while i >= 0 and sims[i] >= lpeak:
            lpeak = sims[i]
            i -= 1
        rpeak = sims[g]
        i = g + 1
        while i < n and sims[i] >= rpeak:
            rpeak = sims[i]
            i += 1
        depth = lpeak + rpeak - 2.0 * sims[g]
        if depth > 0.0:
            out[g] = depth
    return out


# ---------------------------------------------------------------------------
# numba loop bodies (compiled lazily so SEGTOPICS_NUMBA=0 never imports numba)

def _sliding_window_counts_loop(ind, k):  # pragma: no cover - jitted
    n_windows = ind.shape[0] - k + 1
    out = np.empty(n_windows, np.int64)
    s = np.int64(0)
    for j in range(k):
        s += ind[j]
    out[0] = s
    for w in range(1, n_windows):
        s += ind[w + k - 1] - ind[w - 1]
        out[w] = s
    return out


def _gap_cosines_loop(counts, blocksize):  # pragma: no cover - jitted
    n, v = counts.shape
    prefix = np.zeros((n + 1, v), np.int64)
    for r in range(n):
        for t in range(v):
            prefix[r + 1, t] = prefix[r, t] + counts[r, t]
    sims = np.zeros(n - 1, np.float64)
    for g in range(1, n):
        lo = g - blocksize
        if lo < 0:
            lo = 0
        hi = g + blocksize
        if hi > n:
            hi = n
        dot = np.int64(0)
        n1 = np.int64(0)
        n2 = np.int64(0)
        for t in range(v):
            left = prefix[g, t] - prefix[lo, t]
            right = prefix[hi, t] - prefix[g, t]
            dot += left * right
            n1 += left * left
            n2 += right * right
        if n1 > 0 and n2 > 0:
            sims[g - 1] = float(dot) / np.sqrt(float(n1) * float(n2))
    return sims


_JITTED: dict[str, object] = {}


def jit_kernels() -> dict:
    """Compile (once) and return the numba versions; raises if numba is missing."""
    if not _JITTED:
        from numba import njit

        _JITTED["sliding_window_counts"] = njit(cache=True)(_sliding_window_counts_loop)
        _JITTED["gap_cosines"] = njit(cache=True)(_gap_cosines_loop)
        _JITTED["depth_scores_kernel"] = njit(cache=True)(_depth_scores_loop)
    return dict(_JITTED)


def numpy_kernels() -> dict:
    return {
        "sliding_window_counts": _sliding_window_counts_np,
        "gap_cosines": _gap_cosines_np,
        "depth_scores_kernel": _depth_scores_loop,
    }


USING_NUMBA = _numba_enabled()

if USING_NUMBA:
    _active = jit_kernels()
else:
    _active = numpy_kernels()

sliding_window_counts = _active["sliding_window_counts"]
gap_cosines = _active["gap_cosines"]
depth_scores_kernel = _active["depth_scores_kernel"]
