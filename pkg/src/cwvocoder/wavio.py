"""Mono 16-bit PCM WAV reading and writing via the stdlib wave module."""
from __future__ import annotations

import wave
from dataclasses import dataclass

import numpy as np

from .errors import FormatError


@dataclass
class Waveform:
    """Mono audio in [-1, 1] floats plus its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("waveform must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform samples must be finite")
        if np.max(np.abs(self.samples)) > 1.0 + 1e-9:
            raise ValueError("waveform samples must lie in [-1, 1]")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def read_wav(path, expected_rate: int | None = None) -> Waveform:
    """Read a mono 16-bit PCM WAV file.

    Files at any other layout are rejected; when `expected_rate` is given,
    files at other rates are rejected too (there is no resampling).
    """
    try:
        with wave.open(str(path), "rb") as fh:
            channels = fh.getnchannels()
            width = fh.getsampwidth()
            rate = fh.getframerate()
            count = fh.getnframes()
            raw = fh.readframes(count)
    except (wave.Error, EOFError) as exc:
        raise FormatError(f"{path}: not a readable WAV file ({exc})") from exc
    if channels != 1:
        raise FormatError(f"{path}: expected mono audio, got {channels} channels")
    if width != 2:
        raise FormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    if expected_rate is not None and rate != expected_rate:
        raise FormatError(
            f"{path}: expected {expected_rate} Hz audio, got {rate} Hz (resampling is not supported)"
        )
    if count == 0:
        raise FormatError(f"{path}: empty audio stream")
    pcm = np.frombuffer(raw, dtype="<i2")
    return Waveform(pcm.astype(float) / 32768.0, rate)


def write_wav(path, waveform: Waveform) -> None:
    """Write a Waveform as mono 16-bit PCM, clipping anything outside [-1, 1]."""
    pcm = np.clip(np.round(waveform.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(waveform.sample_rate)
        fh.writeframes(pcm.tobytes())
