"""Encoding jobs: transcript or WAV in, EMB1 out."""

from __future__ import annotations

import logging
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .emb1 import write_emb1
from .encoders import load_speech_encoder, load_text_encoder
from .windows import sample_spans

log = logging.getLogger("segtopics_encode")

REQUIRED_RATE = 16000
REQUIRED_CHANNELS = 1
REQUIRED_SAMPWIDTH = 2


@dataclass(frozen=True)
class AdapterJob:
    mode: str
    input_path: str
    language: str
    output_path: str
    window_sec: float = 10.0
    encoder: str = "auto"

    def __post_init__(self):
        if self.mode not in ("text", "speech"):
            raise ValueError(f"mode must be 'text' or 'speech', got {self.mode!r}")


def encode_text(job: AdapterJob) -> int:
    """One embedding row per transcript line; returns the bytes written."""
    if job.mode != "text":
        raise ValueError("encode_text needs a text-mode job")
    text = Path(job.input_path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"empty transcript: {job.input_path}")
    encoder = load_text_encoder(job.encoder, job.language)
    rows = encoder.encode_lines(lines)
    with open(job.output_path, "wb") as sink:
        written = write_emb1(rows, sink)
    log.info("encoded %d lines -> %s (%d bytes)", len(lines), job.output_path, written)
    return written


def _read_wav(path: str) -> np.ndarray:
    with wave.open(path, "rb") as wav:
        channels = wav.getnchannels()
        if channels != REQUIRED_CHANNELS:
            raise ValueError(
                f"expected single-channel WAV, got {channels} channels: {path}"
            )
        rate = wav.getframerate()
        if rate != REQUIRED_RATE:
            raise ValueError(f"expected {REQUIRED_RATE} Hz WAV, got {rate} Hz: {path}")
        if wav.getsampwidth() != REQUIRED_SAMPWIDTH:
            raise ValueError(
                f"expected 16-bit PCM WAV, got {8 * wav.getsampwidth()}-bit: {path}"
            )
        frames = wav.readframes(wav.getnframes())
    return np.frombuffer(frames, dtype="<i2")


def encode_speech(job: AdapterJob) -> int:
    """One embedding row per block window; tail windows follow the engine rule
    (kept iff >= 2 s, otherwise dropped)."""
    if job.mode != "speech":
        raise ValueError("encode_speech needs a speech-mode job")
    samples = _read_wav(job.input_path)
    spans = sample_spans(len(samples), REQUIRED_RATE, window_sec=job.window_sec)
    tail = len(samples) - spans[-1][1]
    if tail > 0:
        log.info(
            "dropping %.2f s tail (< 2 s minimum window)", tail / REQUIRED_RATE
        )
    elif spans[-1][1] - spans[-1][0] < int(round(job.window_sec * REQUIRED_RATE)):
        log.info(
            "keeping %.2f s tail window (>= 2 s rule)",
            (spans[-1][1] - spans[-1][0]) / REQUIRED_RATE,
        )
    encoder = load_speech_encoder(job.encoder, job.language)
    rows = encoder.encode_blocks([samples[a:b] for a, b in spans])
    with open(job.output_path, "wb") as sink:
        written = write_emb1(rows, sink)
    log.info("encoded %d blocks -> %s (%d bytes)", len(spans), job.output_path, written)
    return written
