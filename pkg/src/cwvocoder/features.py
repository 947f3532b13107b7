"""Per-frame vocoder parameter extraction.

Continuous fundamental frequency (defined at every frame, voiced or not),
maximum voiced frequency, and a mel-cepstral spectral envelope, all on a
shared 5 ms / 25 ms analysis grid at 16 kHz.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import wavelet as wv
from .config import DEFAULT_CONFIG, RunConfig
from .wavio import Waveform

#: NCCF value above which a frame counts as voiced evidence.
VOICING_THRESHOLD = 0.5

#: Per-octave cost of changing pitch between frames on the tracking path.
OCTAVE_JUMP_PENALTY = 0.4

#: Mild preference for shorter lags, to break harmonic/subharmonic ties.
LAG_BIAS = 0.05

#: Width of the harmonicity bands used by the MVF estimator.
MVF_BAND_HZ = 500.0
MVF_SCORE_THRESHOLD = 0.5

LOG_FLOOR_DB = -100.0


@dataclass(frozen=True)
class FrameGrid:
    """Analysis frame layout; frame t is centered at t * shift_samples."""

    sample_rate: int
    frame_shift: float
    window_length: float
    num_frames: int

    @property
    def shift_samples(self) -> int:
        return round(self.frame_shift * self.sample_rate)

    @property
    def window_samples(self) -> int:
        return round(self.window_length * self.sample_rate)


@dataclass
class FrameTrack:
    """One scalar per frame, in Hz: either a contF0 or an MVF track."""

    values: np.ndarray
    kind: str
    grid: FrameGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in ("contf0", "mvf"):
            raise ValueError(f"unknown track kind: {self.kind!r}")
        if self.values.shape != (self.grid.num_frames,):
            raise ValueError("track length must equal grid.num_frames")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("track values must be finite")
        if self.kind == "contf0" and not np.all(self.values > 0):
            raise ValueError("contF0 must be strictly positive at every frame")
        nyquist = self.grid.sample_rate / 2.0
        if self.kind == "mvf" and not np.all((self.values >= 0) & (self.values <= nyquist)):
            raise ValueError("MVF must lie in [0, Nyquist]")


@dataclass
class MelCepstrumTrack:
    """Per-frame mel-cepstra c(0..order) under all-pass warping alpha."""

    coefficients: np.ndarray
    order: int
    alpha: float
    grid: FrameGrid

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.grid.num_frames, self.order + 1):
            raise ValueError("coefficient matrix must be num_frames x (order+1)")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("cepstra must be finite")


@dataclass
class UtteranceFeatures:
    """Complete vocoder parameterization of one utterance on one grid."""

    contf0: FrameTrack
    mvf: FrameTrack
    melcep: MelCepstrumTrack
    source_sample_rate: int

    def __post_init__(self):
        if not (self.contf0.grid == self.mvf.grid == self.melcep.grid):
            raise ValueError("all feature tracks must share one frame grid")

    @property
    def grid(self) -> FrameGrid:
        return self.contf0.grid

    @property
    def advertised_dimension(self) -> int:
        """Parameter count excluding the gain term c(0)."""
        return self.melcep.order + 2


def make_frame_grid(waveform: Waveform, frame_shift: float, window_length: float) -> FrameGrid:
    """Grid covering the waveform: floor(duration / shift) + 1 frames."""
    if not (0 < frame_shift < window_length):
        raise ValueError("need 0 < frame_shift < window_length")
    shift_samples = round(frame_shift * waveform.sample_rate)
    window_samples = round(window_length * waveform.sample_rate)
    if shift_samples < 1:
        raise ValueError("frame_shift is below one sample")
    if window_samples > waveform.samples.size:
        raise ValueError("window_length exceeds the waveform duration")
    num_frames = waveform.samples.size // shift_samples + 1
    return FrameGrid(waveform.sample_rate, frame_shift, window_length, num_frames)


def _centered_segment(padded: np.ndarray, pad: int, center: int, length: int) -> np.ndarray:
    start = pad + center - length // 2
    return padded[start:start + length]


# --- continuous pitch ---------------------------------------------------------

def _nccf_frame(padded, pad, center, width, tau_min, tau_max, min_energy):
    """Normalized cross-correlation r(tau) for one frame, tau in [0, tau_max]."""
    start = pad + center - width // 2
    base = padded[start:start + width]
    ext = padded[start:start + width + tau_max]
    energy = float(base @ base)
    variance = energy - width * float(base.mean()) ** 2
    # segments that are constant or negligible against the utterance (DC
    # residue, silence edges) carry no pitch evidence even though they can
    # self-correlate; both gates are invariant under amplitude scaling
    if energy <= min_energy or variance <= 1e-12 * energy:
        return np.zeros(tau_max + 1)
    cross = np.correlate(ext, base, mode="valid")
    sq = np.concatenate(([0.0], np.cumsum(ext * ext)))
    energies = sq[width:width + tau_max + 1] - sq[:tau_max + 1]
    denom = np.sqrt(energies[0] * energies)
    r = np.zeros(tau_max + 1)
    good = denom > 1e-30
    r[good] = cross[good] / denom[good]
    return r


def _frame_candidates(r, tau_min, tau_max, sample_rate, f0_floor, f0_ceil, max_candidates=4):
    """Local NCCF maxima refined by parabolic interpolation, best first.

    Each candidate is (frequency, raw correlation, lag-biased score); the
    score mildly prefers shorter lags so harmonic ties resolve upward.
    """
    band = r[tau_min:tau_max + 1]
    peaks = np.flatnonzero((band[1:-1] >= band[:-2]) & (band[1:-1] >= band[2:])) + 1
    if peaks.size == 0:
        peaks = np.array([int(np.argmax(band))])
    # keep both parabolic neighbors in range
    taus = np.clip(peaks + tau_min, tau_min, tau_max - 1)
    scores = r[taus] - LAG_BIAS * (taus - tau_min) / max(tau_max - tau_min, 1)
    order = np.argsort(scores)[::-1][:max_candidates]
    out = []
    for idx in order:
        tau = int(taus[idx])
        num = r[tau - 1] - r[tau + 1]
        den = r[tau - 1] - 2.0 * r[tau] + r[tau + 1]
        shift = 0.5 * num / den if abs(den) > 1e-12 else 0.0
        tau_ref = tau + float(np.clip(shift, -0.5, 0.5))
        freq = float(np.clip(sample_rate / tau_ref, f0_floor, f0_ceil))
        out.append((freq, float(r[tau]), float(scores[idx])))
    return out


def _viterbi_path(candidates):
    """Minimum-cost pitch path with an octave-jump transition penalty."""
    prev_cost = np.array([1.0 - score for _, _, score in candidates[0]])
    back = []
    for frame in candidates[1:]:
        cur_cost = np.empty(len(frame))
        cur_back = np.empty(len(frame), dtype=int)
        prev_logf = np.array([math.log2(f) for f, _, _ in candidates[len(back)]])
        for i, (freq, _, score) in enumerate(frame):
            trans = prev_cost + OCTAVE_JUMP_PENALTY * np.abs(math.log2(freq) - prev_logf)
            j = int(np.argmin(trans))
            cur_cost[i] = trans[j] + (1.0 - score)
            cur_back[i] = j
        back.append(cur_back)
        prev_cost = cur_cost
    path = [int(np.argmin(prev_cost))]
    for cur_back in reversed(back):
        path.append(int(cur_back[path[-1]]))
    path.reverse()
    return path


def track_contf0(waveform: Waveform, grid: FrameGrid, f0_floor: float = 50.0,
                 f0_ceil: float = 400.0) -> FrameTrack:
    """Continuous pitch: positive at every frame, silence interpolated through.

    Per-frame normalized autocorrelation over the search band, a Viterbi
    path with an octave-jump penalty, then linear (log-domain) interpolation
    across low-confidence frames. With no voiced evidence at all the track
    falls back to the geometric mean of the search bounds.
    """
    if not (0 < f0_floor < f0_ceil < waveform.sample_rate / 2):
        raise ValueError("need 0 < f0_floor < f0_ceil < Nyquist")
    sr = waveform.sample_rate
    tau_min = max(2, int(sr / f0_ceil))
    tau_max = int(math.ceil(sr / f0_floor))
    if tau_max - tau_min < 3:
        raise ValueError("f0 search band is too narrow at this sample rate")
    width = grid.window_samples
    # DC would correlate perfectly at every lag; remove it. Light smoothing
    # (half the shortest period) then widens correlation peaks so slowly
    # drifting periods still line up at the true lag.
    centered = waveform.samples - waveform.samples.mean()
    klen = max(3, int(0.5 * sr / f0_ceil)) | 1
    kernel = np.hanning(klen + 2)[1:-1]
    smoothed = np.convolve(centered, kernel / kernel.sum(), mode="same")
    pad = width // 2 + tau_max + width
    padded = np.concatenate([np.zeros(pad), smoothed, np.zeros(pad)])
    peak = float(np.max(np.abs(waveform.samples)))
    min_energy = width * (1e-9 * peak) ** 2

    candidates = []
    for t in range(grid.num_frames):
        r = _nccf_frame(padded, pad, t * grid.shift_samples, width, tau_min, tau_max, min_energy)
        candidates.append(_frame_candidates(r, tau_min, tau_max, sr, f0_floor, f0_ceil))

    path = _viterbi_path(candidates) if grid.num_frames > 1 else [0]
    raw = np.array([candidates[t][i][0] for t, i in enumerate(path)])
    conf = np.array([candidates[t][i][1] for t, i in enumerate(path)])  # raw NCCF, not lag-biased

    voiced = conf >= VOICING_THRESHOLD
    if not voiced.any():
        values = np.full(grid.num_frames, math.sqrt(f0_floor * f0_ceil))
    else:
        anchors = np.flatnonzero(voiced)
        logf = np.interp(np.arange(grid.num_frames), anchors, np.log2(raw[anchors]))
        values = 2.0 ** logf

    values = _median_smooth(values, 3)
    values = _limit_octave_jumps(values)
    values = np.clip(values, f0_floor, f0_ceil)
    return FrameTrack(values, "contf0", grid)


def _median_smooth(values: np.ndarray, width: int) -> np.ndarray:
    half = width // 2
    padded = np.pad(values, half, mode="edge")
    return np.array([np.median(padded[i:i + width]) for i in range(values.size)])


def _limit_octave_jumps(values: np.ndarray) -> np.ndarray:
    out = values.copy()
    for t in range(1, out.size):
        step = math.log2(out[t] / out[t - 1])
        if abs(step) > 1.0:
            out[t] = out[t - 1] * 2.0 ** math.copysign(1.0, step)
    return out


def refine_contf0_cwt(raw: FrameTrack, ladder: wv.ScaleLadder, drop_finest: int = 1,
                      f0_floor: float = 50.0) -> FrameTrack:
    """Smooth a pitch track by zeroing its finest wavelet scales.

    Decomposes the track, drops the `drop_finest` finest-scale rows, and
    reconstructs with the calibrated constant; the result is clamped to stay
    at or above f0_floor.
    """
    if raw.kind != "contf0":
        raise ValueError("refine_contf0_cwt expects a contF0 track")
    if not (0 <= drop_finest < len(ladder)):
        raise ValueError("drop_finest must be in [0, len(ladder))")
    decomp = wv.cwt_forward(raw.values, ladder)
    if drop_finest:
        decomp.coefficients[:drop_finest] = 0.0
    constant = wv.calibrate_reconstruction_constant(ladder)
    recon = wv.cwt_inverse(decomp, constant)
    return FrameTrack(np.maximum(recon, f0_floor), "contf0", raw.grid)


# --- maximum voiced frequency -------------------------------------------------

def _band_scores(power, f0, sample_rate, fft_size, band_hz):
    """Harmonic-vs-interharmonic contrast score per 500 Hz band."""
    nyquist = sample_rate / 2.0
    num_bands = int(nyquist // band_hz)
    harm = np.zeros(num_bands)
    inter = np.zeros(num_bands)
    counts = np.zeros(num_bands, dtype=int)

    def bin_energy(freq):
        b = int(round(freq * fft_size / sample_rate))
        lo, hi = max(b - 1, 0), min(b + 1, power.size - 1)
        return float(power[lo:hi + 1].sum())

    h = 1
    while (h + 0.5) * f0 < nyquist - 2.0 * sample_rate / fft_size:
        band = int(h * f0 // band_hz)
        if band >= num_bands:
            break
        harm[band] += bin_energy(h * f0)
        inter[band] += bin_energy((h + 0.5) * f0)
        counts[band] += 1
        h += 1

    scores = np.full(num_bands, -1.0)
    for k in range(num_bands):
        if counts[k] == 0:
            continue
        total = harm[k] + inter[k]
        if total <= 0:
            continue
        scores[k] = (harm[k] - inter[k]) / total
    return scores


def estimate_mvf(waveform: Waveform, grid: FrameGrid, contf0: FrameTrack,
                 fft_size: int = 1024, band_hz: float = MVF_BAND_HZ) -> FrameTrack:
    """Per-frame MVF: top of the contiguous harmonic band run, median-smoothed.

    Each 500 Hz band is scored by energy at predicted harmonic bins of
    contF0 against the energy midway between harmonics; the MVF is the
    upper edge of the run of harmonic bands starting at the bottom of the
    spectrum (never below one band width).
    """
    if contf0.grid != grid:
        raise ValueError("contf0 must be aligned to the analysis grid")
    sr = waveform.sample_rate
    nyquist = sr / 2.0
    pad = fft_size
    padded = np.concatenate([np.zeros(pad), waveform.samples, np.zeros(pad)])

    raw = np.empty(grid.num_frames)
    for t in range(grid.num_frames):
        f0 = contf0.values[t]
        wlen = int(min(5.0 * sr / f0, fft_size))
        wlen = max(wlen | 1, 65)
        window = np.hanning(wlen)
        seg = _centered_segment(padded, pad, t * grid.shift_samples, wlen)
        spectrum = np.abs(np.fft.rfft(seg * window, fft_size)) ** 2
        scores = _band_scores(spectrum, f0, sr, fft_size, band_hz)
        run = 0
        for s in scores:
            if s > MVF_SCORE_THRESHOLD:
                run += 1
            else:
                break
        raw[t] = max(run, 1) * band_hz

    values = np.clip(_median_smooth(raw, 5), 0.0, nyquist)
    return FrameTrack(values, "mvf", grid)


# --- spectral envelope ----------------------------------------------------------

def extract_spectral_envelope(waveform: Waveform, grid: FrameGrid, contf0: FrameTrack,
                              fft_size: int = 1024, floor_db: float = LOG_FLOOR_DB) -> np.ndarray:
    """Pitch-adaptive smoothed log-magnitude envelope, one row per frame.

    Each frame is windowed over about three pitch periods (capped at the
    analysis window), its log periodogram is floored at `floor_db`, and
    harmonic ripple is removed by cepstral liftering just below the pitch
    quefrency. Values are natural-log amplitudes at rfft-bin resolution.
    """
    if contf0.grid != grid:
        raise ValueError("contf0 must be aligned to the analysis grid")
    sr = waveform.sample_rate
    power_floor = 10.0 ** (floor_db / 10.0)
    pad = fft_size
    padded = np.concatenate([np.zeros(pad), waveform.samples, np.zeros(pad)])
    bins = fft_size // 2 + 1

    out = np.empty((grid.num_frames, bins))
    quefrency = np.minimum(np.arange(fft_size), fft_size - np.arange(fft_size))
    for t in range(grid.num_frames):
        f0 = contf0.values[t]
        wlen = int(min(3.0 * sr / f0, grid.window_samples))
        wlen = max(wlen | 1, 33)
        window = np.hanning(wlen)
        seg = _centered_segment(padded, pad, t * grid.shift_samples, wlen)
        power = np.abs(np.fft.rfft(seg * window, fft_size)) ** 2 / np.sum(window ** 2)
        log_mag = 0.5 * np.log(np.maximum(power, power_floor))

        q_cut = sr / (1.2 * f0)
        rel = quefrency / q_cut
        lifter = np.where(rel <= 0.5, 1.0,
                          np.where(rel >= 1.0, 0.0, 0.5 * (1.0 + np.cos(2.0 * np.pi * (rel - 0.5)))))
        cepstrum = np.fft.irfft(log_mag, fft_size)
        out[t] = np.fft.rfft(cepstrum * lifter).real[:bins]
    return out


# --- mel-cepstrum conversion ------------------------------------------------------

def warp_frequency(omega, alpha: float):
    """First-order all-pass frequency warping of omega in [0, pi]."""
    omega = np.asarray(omega, dtype=float)
    return omega + 2.0 * np.arctan(alpha * np.sin(omega) / (1.0 - alpha * np.cos(omega)))


@lru_cache(maxsize=8)
def _dct1_analysis(k_bins: int, rows: int) -> np.ndarray:
    """Matrix giving cosine-series coefficients from K+1 uniform samples."""
    grid = np.pi * np.arange(k_bins + 1) / k_bins
    weights = np.ones(k_bins + 1)
    weights[0] = weights[-1] = 0.5
    norm = np.full(rows, 2.0 / k_bins)
    norm[0] = 1.0 / k_bins
    if rows == k_bins + 1:
        norm[-1] = 1.0 / k_bins
    return norm[:, None] * weights[None, :] * np.cos(np.outer(np.arange(rows), grid))


@lru_cache(maxsize=8)
def _cep_from_env_matrix(k_bins: int, order: int, alpha: float) -> np.ndarray:
    grid = np.pi * np.arange(k_bins + 1) / k_bins
    analysis_full = _dct1_analysis(k_bins, k_bins + 1)
    nodes = warp_frequency(grid, -alpha)
    evaluate = np.cos(np.outer(nodes, np.arange(k_bins + 1)))
    analysis_low = _dct1_analysis(k_bins, order + 1)
    return analysis_low @ evaluate @ analysis_full


@lru_cache(maxsize=8)
def _env_from_cep_matrix(k_bins: int, order: int, alpha: float) -> np.ndarray:
    grid = np.pi * np.arange(k_bins + 1) / k_bins
    warped = warp_frequency(grid, alpha)
    return np.cos(np.outer(warped, np.arange(order + 1)))


def envelope_to_melcepstrum(envelope: np.ndarray, order: int, alpha: float,
                            grid: FrameGrid) -> MelCepstrumTrack:
    """Warp log envelopes onto the mel axis and truncate to `order` cepstra."""
    if order < 1:
        raise ValueError("order must be at least 1")
    if not abs(alpha) < 1:
        raise ValueError("alpha must satisfy |alpha| < 1")
    envelope = np.atleast_2d(np.asarray(envelope, dtype=float))
    k_bins = envelope.shape[1] - 1
    matrix = _cep_from_env_matrix(k_bins, order, alpha)
    return MelCepstrumTrack(envelope @ matrix.T, order, alpha, grid)


def melcepstrum_to_envelope(track: MelCepstrumTrack, fft_size: int = 1024) -> np.ndarray:
    """Decode cepstra back to natural-log amplitude at rfft-bin resolution."""
    matrix = _env_from_cep_matrix(fft_size // 2, track.order, track.alpha)
    return track.coefficients @ matrix.T


def decode_envelope(coefficients: np.ndarray, alpha: float, omega) -> np.ndarray:
    """Log amplitude sum(c_m cos(m * warp(omega))) at arbitrary frequencies."""
    coefficients = np.asarray(coefficients, dtype=float)
    warped = warp_frequency(np.asarray(omega, dtype=float), alpha)
    return np.cos(np.outer(warped, np.arange(coefficients.size))) @ coefficients


# --- top-level analysis -------------------------------------------------------------

def analyze_utterance(waveform: Waveform, config: RunConfig = DEFAULT_CONFIG) -> UtteranceFeatures:
    """Full analysis pass: one aligned feature set per utterance.

    Deterministic for identical input and configuration.
    """
    config.validate()
    grid = make_frame_grid(waveform, config.frame_shift, config.window_length)
    contf0 = track_contf0(waveform, grid, config.f0_floor, config.f0_ceil)
    mvf = estimate_mvf(waveform, grid, contf0, config.fft_size)
    envelope = extract_spectral_envelope(waveform, grid, contf0, config.fft_size)
    melcep = envelope_to_melcepstrum(envelope, config.order, config.alpha, grid)
    return UtteranceFeatures(contf0, mvf, melcep, waveform.sample_rate)
