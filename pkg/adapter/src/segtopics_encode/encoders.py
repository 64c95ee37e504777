"""Encoder backends producing 1024-dim block embeddings.

The deterministic built-ins (`hash` for text, `spectral` for speech) keep the
adapter self-contained: no model downloads, identical input gives identical
output. Pretrained multilingual encoders plug in behind the same interface;
the `sonar` backend name is reserved for one and reports a load failure when
its model stack is not installed.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

EMBED_DIM = 1024

_LANG_RE = re.compile(r"^[a-z]{2,3}$")


class EncoderLoadError(RuntimeError):
    pass


def check_language(lang: str) -> str:
    if not _LANG_RE.match(lang):
        raise ValueError(f"unsupported language tag {lang!r}: expected ISO 639 code")
    return lang


class TextHashEncoder:
    """Feature-hashing sentence encoder: token unigrams and bigrams are hashed
    into signed buckets, L2-normalized. Language-salted so different language
    tags give different spaces, like language-specific pretrained encoders."""

    def __init__(self, lang: str, dim: int = EMBED_DIM):
        self.lang = check_language(lang)
        self.dim = dim

    def _bucket(self, feature: str) -> tuple[int, float]:
        digest = hashlib.blake2b(
            f"{self.lang}\x00{feature}".encode("utf-8"), digest_size=8
        ).digest()
        value = int.from_bytes(digest, "little")
        return value % self.dim, 1.0 if (value >> 63) & 1 else -1.0

    def encode_line(self, line: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        tokens = line.lower().split()
        for feature in tokens + [f"{a}\x01{b}" for a, b in zip(tokens, tokens[1:])]:
            idx, sign = self._bucket(feature)
            vec[idx] += sign
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            idx, sign = self._bucket("\x02empty")
            vec[idx] = sign
            norm = 1.0
        return (vec / norm).astype(np.float32)

    def encode_lines(self, lines: list[str]) -> np.ndarray:
        return np.stack([self.encode_line(line) for line in lines])


class SpectralSpeechEncoder:
    """Log-magnitude spectrum of each audio block, averaged into fixed bands
    and L2-normalized. Deterministic stand-in for a pretrained speech encoder."""

    def __init__(self, lang: str, dim: int = EMBED_DIM):
        self.lang = check_language(lang)
        self.dim = dim

    def encode_block(self, samples: np.ndarray) -> np.ndarray:
        x = samples.astype(np.float64) / 32768.0
        spectrum = np.log1p(np.abs(np.fft.rfft(x)))
        edges = np.linspace(0, spectrum.shape[0], self.dim + 1).astype(np.int64)
        vec = np.zeros(self.dim, dtype=np.float64)
        for i in range(self.dim):
            lo, hi = edges[i], edges[i + 1]
            if hi > lo:
                vec[i] = spectrum[lo:hi].mean()
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            vec[0] = 1.0
            norm = 1.0
        return (vec / norm).astype(np.float32)

    def encode_blocks(self, blocks: list[np.ndarray]) -> np.ndarray:
        return np.stack([self.encode_block(b) for b in blocks])


def load_text_encoder(name: str, lang: str):
    if name in ("auto", "hash"):
        return TextHashEncoder(lang)
    if name == "sonar":
        raise EncoderLoadError(
            "encoder load failure: the 'sonar' sentence encoder backend needs the "
            "pretrained model stack, which is not installed; use --encoder hash"
        )
    raise ValueError(f"unknown text encoder {name!r}")


def load_speech_encoder(name: str, lang: str):
    if name in ("auto", "spectral"):
        return SpectralSpeechEncoder(lang)
    if name == "sonar":
        raise EncoderLoadError(
            "encoder load failure: the 'sonar' speech encoder backend needs the "
            "pretrained model stack, which is not installed; use --encoder spectral"
        )
    raise ValueError(f"unknown speech encoder {name!r}")
