"""Wavelet decomposition of whole feature sets and weighted recomposition.

Every scalar trajectory (contF0, MVF, each mel-cepstral coefficient) is
decomposed independently against one shared ladder; recomposition applies
optional per-scale weights before the inverse, then clamps the physical
tracks back into range.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import wavelet as wv
from .features import FrameGrid, FrameTrack, MelCepstrumTrack, UtteranceFeatures


@dataclass
class ScaleWeights:
    """Non-negative per-scale gains; all ones is the identity."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1:
            raise ValueError("weights must be a 1-D sequence")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise ValueError("weights must be finite and non-negative")

    @classmethod
    def identity(cls, num_scales: int) -> "ScaleWeights":
        return cls(np.ones(num_scales))


@dataclass
class FeatureDecomposition:
    """Per-track wavelet decompositions of one utterance's features."""

    contf0: wv.WaveletDecomposition
    mvf: wv.WaveletDecomposition
    melcep: list[wv.WaveletDecomposition]
    ladder: wv.ScaleLadder
    grid: FrameGrid
    order: int
    alpha: float
    source_sample_rate: int

    def __post_init__(self):
        members = [self.contf0, self.mvf, *self.melcep]
        if len(self.melcep) != self.order + 1:
            raise ValueError("need one mel-cepstral decomposition per coefficient")
        for member in members:
            if member.ladder != self.ladder:
                raise ValueError("all tracks must share the ladder")
            if member.signal_length != self.grid.num_frames:
                raise ValueError("all tracks must cover the frame grid")


def decompose_features(features: UtteranceFeatures, ladder: wv.ScaleLadder) -> FeatureDecomposition:
    """Decompose contF0, MVF, and every cepstral trajectory against `ladder`."""
    melcep = [wv.cwt_forward(features.melcep.coefficients[:, m], ladder)
              for m in range(features.melcep.order + 1)]
    return FeatureDecomposition(
        contf0=wv.cwt_forward(features.contf0.values, ladder),
        mvf=wv.cwt_forward(features.mvf.values, ladder),
        melcep=melcep,
        ladder=ladder,
        grid=features.grid,
        order=features.melcep.order,
        alpha=features.melcep.alpha,
        source_sample_rate=features.source_sample_rate,
    )


def _weighted_inverse(decomp: wv.WaveletDecomposition, weights: np.ndarray, constant: float) -> np.ndarray:
    scaled = wv.WaveletDecomposition(
        decomp.coefficients * weights[:, None],
        decomp.ladder, decomp.signal_length, decomp.signal_mean,
    )
    return wv.cwt_inverse(scaled, constant)


def recompose_features(decomp: FeatureDecomposition, weights: ScaleWeights | None = None,
                       f0_floor: float = 50.0) -> UtteranceFeatures:
    """Rebuild features from a decomposition, applying per-scale weights.

    Reconstructed contF0 is clamped to stay at or above f0_floor and MVF
    into [0, Nyquist], so the output always satisfies the feature
    invariants regardless of the weighting.
    """
    if weights is None:
        weights = ScaleWeights.identity(len(decomp.ladder))
    if weights.weights.size != len(decomp.ladder):
        raise ValueError("weights length must match the ladder")
    w = weights.weights
    constant = wv.calibrate_reconstruction_constant(decomp.ladder)

    contf0 = np.maximum(_weighted_inverse(decomp.contf0, w, constant), f0_floor)
    nyquist = decomp.source_sample_rate / 2.0
    mvf = np.clip(_weighted_inverse(decomp.mvf, w, constant), 0.0, nyquist)
    cep = np.column_stack([_weighted_inverse(track, w, constant) for track in decomp.melcep])

    return UtteranceFeatures(
        contf0=FrameTrack(contf0, "contf0", decomp.grid),
        mvf=FrameTrack(mvf, "mvf", decomp.grid),
        melcep=MelCepstrumTrack(cep, decomp.order, decomp.alpha, decomp.grid),
        source_sample_rate=decomp.source_sample_rate,
    )


def _track_names(order: int) -> list[str]:
    return ["contf0", "mvf"] + [f"c{m}" for m in range(order + 1)]


def _member_tracks(decomp: FeatureDecomposition) -> list[wv.WaveletDecomposition]:
    return [decomp.contf0, decomp.mvf, *decomp.melcep]


def export_decomposition_csv(decomp: FeatureDecomposition, directory, utterance: str) -> list[Path]:
    """Write one `<utt>.<track>.cwt.csv` per trajectory plus a metadata sidecar.

    The sidecar (`<utt>.cwtmeta.json`) carries what the CSV matrix cannot:
    per-track means, the frame grid, and the cepstrum parameters.
    """
    directory = Path(directory)
    written = []
    names = _track_names(decomp.order)
    for name, member in zip(names, _member_tracks(decomp)):
        path = directory / f"{utterance}.{name}.cwt.csv"
        wv.write_decomposition_csv(member, path)
        written.append(path)
    meta = {
        "utterance": utterance,
        "sample_rate": decomp.source_sample_rate,
        "frame_shift": decomp.grid.frame_shift,
        "window_length": decomp.grid.window_length,
        "num_frames": decomp.grid.num_frames,
        "order": decomp.order,
        "alpha": decomp.alpha,
        "means": {name: member.signal_mean
                  for name, member in zip(names, _member_tracks(decomp))},
    }
    meta_path = directory / f"{utterance}.cwtmeta.json"
    meta_path.write_text(json.dumps(meta, indent=1))
    written.append(meta_path)
    return written


def import_decomposition_csv(directory, utterance: str) -> FeatureDecomposition:
    """Read back a per-track CSV export produced by export_decomposition_csv."""
    directory = Path(directory)
    meta = json.loads((directory / f"{utterance}.cwtmeta.json").read_text())
    grid = FrameGrid(meta["sample_rate"], meta["frame_shift"],
                     meta["window_length"], meta["num_frames"])
    names = _track_names(meta["order"])
    members = {}
    for name in names:
        path = directory / f"{utterance}.{name}.cwt.csv"
        members[name] = wv.read_decomposition_csv(path, signal_mean=meta["means"][name])
    return FeatureDecomposition(
        contf0=members["contf0"],
        mvf=members["mvf"],
        melcep=[members[f"c{m}"] for m in range(meta["order"] + 1)],
        ladder=members["contf0"].ladder,
        grid=grid,
        order=meta["order"],
        alpha=meta["alpha"],
        source_sample_rate=meta["sample_rate"],
    )
