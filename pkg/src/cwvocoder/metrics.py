"""Objective evaluation: mel-cepstral distortion and continuous-F0 RMSE."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_CONFIG, RunConfig
from .errors import AlignmentError
from .features import FrameTrack, MelCepstrumTrack, analyze_utterance
from .wavio import Waveform

MCD_CONSTANT = 10.0 / math.log(10.0)


@dataclass
class EvaluationReport:
    mcd_db: float
    f0_rmse_hz: float
    num_frames: int
    per_frame_mcd: np.ndarray | None = None

    def __post_init__(self):
        if self.mcd_db < 0 or self.f0_rmse_hz < 0:
            raise ValueError("metric values must be non-negative")


def mcd(ref: MelCepstrumTrack, syn: MelCepstrumTrack, include_gain: bool = False,
        return_per_frame: bool = False):
    """Frame-averaged mel-cepstral distortion in dB.

    Per frame: (10/ln 10) * sqrt(sum_m (c_ref(m) - c_syn(m))^2), summing
    from m=1 unless `include_gain` pulls c(0) in.
    """
    if ref.coefficients.shape != syn.coefficients.shape:
        raise ValueError("tracks must have equal num_frames and order")
    if ref.order != syn.order or abs(ref.alpha - syn.alpha) > 1e-9:
        raise ValueError("tracks must share order and warping")
    start = 0 if include_gain else 1
    diff = ref.coefficients[:, start:] - syn.coefficients[:, start:]
    per_frame = MCD_CONSTANT * np.sqrt(np.sum(diff * diff, axis=1))
    value = float(np.mean(per_frame))
    if return_per_frame:
        return value, per_frame
    return value


def f0_rmse(ref: FrameTrack, syn: FrameTrack) -> float:
    """Root-mean-square difference of two F0 tracks, in Hz."""
    if ref.values.shape != syn.values.shape:
        raise ValueError("tracks must have equal num_frames")
    return float(np.sqrt(np.mean((ref.values - syn.values) ** 2)))


def _truncated(track_values: np.ndarray, frames: int) -> np.ndarray:
    return track_values[:frames]


def evaluate_pair(ref_wav: Waveform, syn_wav: Waveform,
                  config: RunConfig = DEFAULT_CONFIG) -> EvaluationReport:
    """Analyze both waveforms identically and compare their features.

    Tracks are truncated to the shorter frame count; durations more than
    10% apart are rejected as misaligned rather than silently compared.
    """
    if ref_wav.sample_rate != syn_wav.sample_rate:
        raise ValueError("sample rates must match")
    ref_dur = ref_wav.samples.size
    syn_dur = syn_wav.samples.size
    if abs(ref_dur - syn_dur) > 0.10 * ref_dur:
        raise AlignmentError(
            f"durations differ by more than 10% ({ref_dur} vs {syn_dur} samples)"
        )
    ref_feats = analyze_utterance(ref_wav, config)
    syn_feats = analyze_utterance(syn_wav, config)
    frames = min(ref_feats.grid.num_frames, syn_feats.grid.num_frames)

    grid = ref_feats.grid if ref_feats.grid.num_frames == frames else syn_feats.grid
    ref_cep = MelCepstrumTrack(ref_feats.melcep.coefficients[:frames], config.order, config.alpha, grid)
    syn_cep = MelCepstrumTrack(syn_feats.melcep.coefficients[:frames], config.order, config.alpha, grid)
    mcd_value, per_frame = mcd(ref_cep, syn_cep, return_per_frame=True)
    rmse_value = f0_rmse(
        FrameTrack(ref_feats.contf0.values[:frames], "contf0", grid),
        FrameTrack(syn_feats.contf0.values[:frames], "contf0", grid),
    )
    return EvaluationReport(mcd_value, rmse_value, frames, per_frame)


def corpus_summary(values) -> dict:
    """Mean and normal-approximation 95% confidence half-width."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        return {"n": 0, "mean": None, "ci95": None}
    mean = float(np.mean(arr))
    if arr.size < 2:
        return {"n": 1, "mean": mean, "ci95": 0.0}
    half = 1.96 * float(np.std(arr, ddof=1)) / math.sqrt(arr.size)
    return {"n": int(arr.size), "mean": mean, "ci95": half}
