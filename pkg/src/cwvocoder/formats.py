"""Binary serialization of features (CWVF) and residual prototypes (CWRP).

Both formats are little-endian throughout and round-trip bit-exactly;
malformed files raise FormatError rather than crashing.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError
from .features import FrameGrid, FrameTrack, MelCepstrumTrack, UtteranceFeatures
from .synthesis import ResidualPrototype

FEATURE_MAGIC = b"CWVF"
PROTOTYPE_MAGIC = b"CWRP"
FORMAT_VERSION = 1

_FEATURE_HEADER = struct.Struct("<4sIIIIIfI")
_PROTOTYPE_HEADER = struct.Struct("<4sIII")


def write_features(path, features: UtteranceFeatures) -> None:
    """Write a CWVF file: header then per-frame [contF0, MVF, c(0..order)]."""
    grid = features.grid
    melcep = features.melcep
    payload = np.empty((grid.num_frames, melcep.order + 3), dtype="<f4")
    payload[:, 0] = features.contf0.values
    payload[:, 1] = features.mvf.values
    payload[:, 2:] = melcep.coefficients
    header = _FEATURE_HEADER.pack(
        FEATURE_MAGIC, FORMAT_VERSION,
        features.source_sample_rate,
        round(grid.frame_shift * 1_000_000),
        round(grid.window_length * 1_000_000),
        melcep.order, melcep.alpha, grid.num_frames,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_features(path) -> UtteranceFeatures:
    """Read a CWVF file back into UtteranceFeatures."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _FEATURE_HEADER.size:
        raise FormatError(f"{path}: truncated feature file header")
    magic, version, rate, shift_us, window_us, order, alpha, num_frames = \
        _FEATURE_HEADER.unpack_from(blob)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported feature file version {version}")
    expected = num_frames * (order + 3) * 4
    body = blob[_FEATURE_HEADER.size:]
    if len(body) != expected:
        raise FormatError(
            f"{path}: payload is {len(body)} bytes, expected {expected}"
        )
    payload = np.frombuffer(body, dtype="<f4").reshape(num_frames, order + 3).astype(float)
    grid = FrameGrid(rate, shift_us / 1_000_000, window_us / 1_000_000, num_frames)
    return UtteranceFeatures(
        contf0=FrameTrack(payload[:, 0], "contf0", grid),
        mvf=FrameTrack(payload[:, 1], "mvf", grid),
        melcep=MelCepstrumTrack(payload[:, 2:], order, float(alpha), grid),
        source_sample_rate=rate,
    )


def write_prototype(path, prototype: ResidualPrototype) -> None:
    """Write a CWRP file: header, mean frame, then K components (float32)."""
    header = _PROTOTYPE_HEADER.pack(
        PROTOTYPE_MAGIC, FORMAT_VERSION,
        prototype.num_components, prototype.frame_length,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(prototype.mean_frame.astype("<f4").tobytes())
        fh.write(prototype.frames.astype("<f4").tobytes())


def read_prototype(path) -> ResidualPrototype:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _PROTOTYPE_HEADER.size:
        raise FormatError(f"{path}: truncated prototype header")
    magic, version, count, length = _PROTOTYPE_HEADER.unpack_from(blob)
    if magic != PROTOTYPE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {PROTOTYPE_MAGIC!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported prototype version {version}")
    expected = (count + 1) * length * 4
    body = blob[_PROTOTYPE_HEADER.size:]
    if len(body) != expected:
        raise FormatError(f"{path}: payload is {len(body)} bytes, expected {expected}")
    values = np.frombuffer(body, dtype="<f4").astype(float)
    mean = values[:length]
    frames = values[length:].reshape(count, length)
    # float32 storage nudges norms; renormalize within write precision
    norms = np.linalg.norm(frames, axis=1, keepdims=True)
    if np.any(norms < 0.5) or np.any(norms > 2.0):
        raise FormatError(f"{path}: component norms far from unit; corrupt file")
    return ResidualPrototype(frames / norms, mean, count, length)
