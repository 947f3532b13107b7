"""Waveform reconstruction from vocoder features.

Voiced excitation is built by pitch-synchronous overlap-add of a trained
residual prototype, split against noise at the per-frame maximum voiced
frequency, and shaped by an exponential mel-cepstral synthesis filter
(all-pass warped, rational approximation of exp).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal as sps

from .errors import FilterInstabilityError, TrainingError
from .features import FrameGrid, FrameTrack, MelCepstrumTrack, UtteranceFeatures
from .wavio import Waveform

log = logging.getLogger(__name__)

#: |b(m)| beyond this exceeds the validity range of the exp approximation.
COEFFICIENT_BOUND = 6.0

#: Minimum NCCF at the pitch lag for a frame to contribute training residuals.
TRAIN_VOICING_THRESHOLD = 0.6


@dataclass(frozen=True)
class SynthesisConfig:
    noise_seed: int = 1234
    pade_order: int = 5
    lowpass_taps: int = 129
    alpha: float = 0.42
    noise_gain: float = 1.0

    def __post_init__(self):
        if self.pade_order not in (4, 5):
            raise ValueError("pade_order must be 4 or 5")
        if self.lowpass_taps < 3 or self.lowpass_taps % 2 == 0:
            raise ValueError("lowpass_taps must be odd and at least 3")


@dataclass
class ResidualPrototype:
    """Energy-normalized residual principal components plus their mean frame."""

    frames: np.ndarray
    mean_frame: np.ndarray
    num_components: int
    frame_length: int
    training_frame_count: int | None = None  # not serialized; training metadata

    def __post_init__(self):
        self.frames = np.atleast_2d(np.asarray(self.frames, dtype=float))
        self.mean_frame = np.asarray(self.mean_frame, dtype=float)
        if self.frames.shape != (self.num_components, self.frame_length):
            raise ValueError("frames must be num_components x frame_length")
        if self.mean_frame.shape != (self.frame_length,):
            raise ValueError("mean_frame must have frame_length samples")
        norms = np.linalg.norm(self.frames, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("components must have unit L2 norm")
        gram = self.frames @ self.frames.T
        if np.max(np.abs(gram - np.eye(self.num_components))) > 1e-6:
            raise ValueError("components must be mutually orthogonal")


@dataclass
class ExcitationSignal:
    """Mixed excitation with its voiced/noise split kept for diagnostics."""

    samples: np.ndarray
    voiced_part: np.ndarray
    noise_part: np.ndarray


def unit_pulse_prototype(frame_length: int = 512, pulse_width: int = 33) -> ResidualPrototype:
    """Synthetic prototype (narrow centered bump); handy for diagnostics.

    The bump is wide enough to survive resampling to short pitch periods,
    unlike a single-sample impulse.
    """
    component = np.zeros(frame_length)
    start = frame_length // 2 - pulse_width // 2
    component[start:start + pulse_width] = np.hanning(pulse_width)
    component /= np.linalg.norm(component)
    return ResidualPrototype(component[None, :], np.zeros(frame_length), 1, frame_length)


# --- exponential mel-cepstral filter -------------------------------------------

@lru_cache(maxsize=4)
def _pade_coefficients(order: int) -> tuple[float, ...]:
    """Diagonal [L/L] rational coefficients of exp: N(w) = sum A_l w**l."""
    two = math.factorial(2 * order)
    return tuple(
        math.factorial(2 * order - l) * math.factorial(order)
        / (two * math.factorial(l) * math.factorial(order - l))
        for l in range(order + 1)
    )


def mel_cepstrum_to_filter_coefficients(cepstra: np.ndarray, alpha: float) -> np.ndarray:
    """Per-frame basis change from c(m) to the filter's b(m) coefficients."""
    cepstra = np.atleast_2d(np.asarray(cepstra, dtype=float))
    reversed_cep = cepstra[:, ::-1]
    filtered = sps.lfilter([1.0], [1.0, alpha], reversed_cep, axis=1)
    return filtered[:, ::-1]


@lru_cache(maxsize=8)
def _chain_unravel_matrix(m_order: int, alpha: float) -> np.ndarray:
    # lower-triangular Toeplitz of (-alpha)**(row-col), resolving the
    # same-sample dependency along the warped delay chain
    idx = np.arange(m_order)
    power = idx[:, None] - idx[None, :]
    mat = np.where(power >= 0, (-alpha) ** np.maximum(power, 0), 0.0)
    return mat


def _interpolate_per_sample(frames: np.ndarray, num_samples: int, shift: int) -> np.ndarray:
    """Linear interpolation of per-frame rows to per-sample rows."""
    pos = np.arange(num_samples) / shift
    idx0 = np.minimum(pos.astype(int), frames.shape[0] - 1)
    idx1 = np.minimum(idx0 + 1, frames.shape[0] - 1)
    frac = np.clip(pos - idx0, 0.0, 1.0)[:, None]
    return frames[idx0] * (1.0 - frac) + frames[idx1] * frac


def _run_exp_filter_stages(x: np.ndarray, b_samples: np.ndarray, alpha: float,
                           pade_order: int, reverse_stages: bool) -> np.ndarray:
    """Time-varying exp(F) filter core: two cascaded rational exp stages.

    Stage one realizes exp(b(1) * Phi_1), stage two exp(sum_{m>=2} b(m) Phi_m),
    each as N(F)/N(-F) with the shared strictly-causal F; coefficients vary
    per sample. `reverse_stages` runs stage two first (used by the inverse
    so a round trip cancels stage by stage).
    """
    pade = _pade_coefficients(pade_order)
    levels = pade_order
    weights = [float(w) for w in pade[1:]]
    signs = [1.0 if i % 2 == 0 else -1.0 for i in range(levels)]
    signed = [w * s for w, s in zip(weights, signs)]
    m_order = b_samples.shape[1] - 1
    c1 = 1.0 - alpha * alpha
    has_stage2 = m_order >= 2
    level_range = range(levels)

    # stage 1 runs on plain floats (tiny state), stage 2 on small ndarrays
    s1 = [0.0] * levels
    in1 = [0.0] * levels
    b1_stream = b_samples[:, 1].tolist()
    out = np.empty_like(x)

    def stage1(value, b1):
        acc_s = 0.0
        acc_w = 0.0
        prev = value
        for i in level_range:
            s = c1 * in1[i] + alpha * s1[i]
            s1[i] = s
            v = b1 * s
            acc_s += signed[i] * v
            acc_w += weights[i] * v
            in1[i] = prev
            prev = v
        mid = value + acc_s
        in1[0] = mid
        return mid + acc_w

    if not has_stage2:
        for n in range(x.size):
            out[n] = stage1(x[n], b1_stream[n])
        return out

    unravel_t = _chain_unravel_matrix(m_order, alpha).T.copy()
    q = np.zeros((levels, m_order))
    q_next = np.empty((levels, m_order))
    in2 = np.zeros(levels)
    h = np.empty((levels, m_order))
    # rows of the (levels x 2) result give the signed/plain Pade sums at once
    pair_matrix = np.array([signed, weights])
    b_high = np.ascontiguousarray(b_samples[:, 2:])
    state = {"q": q, "q_next": q_next}

    def stage2(value, bn_high):
        q, q_next = state["q"], state["q_next"]
        h[:, 0] = c1 * in2 + alpha * q[:, 0]
        h[:, 1:] = q[:, :-1] + alpha * q[:, 1:]
        np.matmul(h, unravel_t, out=q_next)
        v = q_next[:, 1:] @ bn_high
        acc_s, acc_w = pair_matrix @ v
        mid = value + acc_s
        in2[0] = mid
        in2[1:] = v[:-1]
        state["q"], state["q_next"] = q_next, q
        return mid + acc_w

    if reverse_stages:
        for n in range(x.size):
            out[n] = stage1(stage2(x[n], b_high[n]), b1_stream[n])
    else:
        for n in range(x.size):
            out[n] = stage2(stage1(x[n], b1_stream[n]), b_high[n])
    return out


def _prepare_filter_run(excitation, melcep: MelCepstrumTrack, config: SynthesisConfig,
                        negate: bool):
    x = np.asarray(excitation, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("excitation must be a non-empty 1-D sequence")
    shift = melcep.grid.shift_samples
    max_len = (melcep.grid.num_frames + 1) * shift
    if x.size > max_len:
        raise ValueError("excitation length is inconsistent with the feature grid")
    b_frames = mel_cepstrum_to_filter_coefficients(melcep.coefficients, melcep.alpha)
    worst = np.max(np.abs(b_frames[:, 1:]), axis=1) if melcep.order >= 1 else np.zeros(len(b_frames))
    offender = int(np.argmax(worst))
    if worst[offender] > COEFFICIENT_BOUND:
        raise FilterInstabilityError(
            f"filter coefficient magnitude {worst[offender]:.3f} exceeds "
            f"{COEFFICIENT_BOUND} at frame {offender}"
        )
    if negate:
        b_frames = -b_frames
    return x, _interpolate_per_sample(b_frames, x.size, shift)


def mglsa_synthesis_filter(excitation, melcep: MelCepstrumTrack,
                           config: SynthesisConfig = SynthesisConfig()) -> np.ndarray:
    """Filter an excitation with the exponential mel-cepstral transfer function.

    Coefficients are interpolated sample-by-sample between frame centers;
    the gain term exp(b(0)) is applied at the output.
    """
    x, b_samples = _prepare_filter_run(excitation, melcep, config, negate=False)
    shaped = _run_exp_filter_stages(x, b_samples, melcep.alpha, config.pade_order,
                                    reverse_stages=False)
    return shaped * np.exp(b_samples[:, 0])


def mglsa_inverse_filter(waveform: Waveform, melcep: MelCepstrumTrack,
                         config: SynthesisConfig = SynthesisConfig()) -> np.ndarray:
    """Whitening counterpart of the synthesis filter (negated cepstrum).

    Runs the gain first and the stages in reverse order so that
    synthesis(inverse(x)) cancels stage by stage up to coefficient motion.
    """
    x, b_samples = _prepare_filter_run(waveform.samples, melcep, config, negate=True)
    return _run_exp_filter_stages(x * np.exp(b_samples[:, 0]), b_samples, melcep.alpha,
                                  config.pade_order, reverse_stages=True)


# --- excitation ------------------------------------------------------------------

def generate_voiced_excitation(contf0: FrameTrack, prototype: ResidualPrototype,
                               num_samples: int, sample_rate: int) -> np.ndarray:
    """Overlap-add the prototype pulse at marks paced by integrating contF0.

    Each mark advances by the local period; the pulse is resampled to two
    local periods and Hann-tapered, so adjacent pulses overlap by half.
    """
    if contf0.kind != "contf0":
        raise ValueError("excitation generation needs a contF0 track")
    if num_samples < 0:
        raise ValueError("num_samples must be non-negative")
    if num_samples == 0:
        return np.zeros(0)

    grid = contf0.grid
    frame_pos = np.arange(grid.num_frames) * grid.shift_samples
    f0 = np.interp(np.arange(num_samples), frame_pos, contf0.values)

    pulse = prototype.mean_frame + prototype.frames[0]
    norm = np.linalg.norm(pulse)
    if norm < 1e-12:
        raise ValueError("prototype pulse has no energy")
    # scaled so the overlap-added excitation comes out near unit RMS
    pulse = pulse * (math.sqrt(2.0 * prototype.frame_length / 3.0) / norm)
    src_idx = np.arange(prototype.frame_length)

    margin = int(2.0 * sample_rate / np.min(contf0.values)) + 2
    out = np.zeros(num_samples + 2 * margin)
    t = 0.0
    while t < num_samples:
        anchor = min(int(t), num_samples - 1)
        period = sample_rate / f0[anchor]
        width = max(int(round(2.0 * period)), 4)
        resampled = np.interp(np.linspace(0.0, prototype.frame_length - 1.0, width), src_idx, pulse)
        tapered = resampled * np.hanning(width)
        start = margin + int(round(t)) - width // 2
        out[start:start + width] += tapered
        t += period
    return out[margin:margin + num_samples]


@lru_cache(maxsize=256)
def _cutoff_filters(cutoff_key: int, sample_rate: int, num_taps: int) -> tuple[np.ndarray, np.ndarray]:
    """(lowpass, complementary highpass) windowed-sinc pair for one cutoff."""
    nyquist = sample_rate / 2.0
    cutoff = float(cutoff_key)
    half = num_taps // 2
    delta = np.zeros(num_taps)
    delta[half] = 1.0
    if cutoff >= nyquist * 0.999:
        return delta, np.zeros(num_taps)
    if cutoff <= 50.0:
        return np.zeros(num_taps), delta
    lowpass = sps.firwin(num_taps, cutoff, window="hamming", fs=sample_rate)
    return lowpass, delta - lowpass


def mix_excitation_mvf(voiced, mvf: FrameTrack, grid: FrameGrid, seed: int,
                       noise_gain: float = 1.0, num_taps: int = 129) -> ExcitationSignal:
    """Split excitation at the per-frame MVF cutoff: voiced below, noise above.

    Frame-length windows (half overlap, exact reconstruction) are lowpass
    filtered at the local MVF; seeded Gaussian noise is highpass filtered at
    the same cutoff and gain-matched to the local voiced RMS times
    `noise_gain`. Deterministic given the seed.
    """
    voiced = np.asarray(voiced, dtype=float)
    if mvf.kind != "mvf":
        raise ValueError("mixing needs an MVF track")
    hop = grid.shift_samples
    if voiced.size > (grid.num_frames + 1) * hop:
        raise ValueError("voiced length is inconsistent with the frame grid")
    n = voiced.size
    window_len = 2 * hop
    window = np.hanning(window_len + 1)[:-1]  # periodic: exact unit overlap-add
    half = num_taps // 2

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n)
    pad = window_len + half
    vpad = np.pad(voiced, pad)
    npad = np.pad(noise, pad)

    voiced_out = np.zeros(n)
    noise_out = np.zeros(n)
    for k in range(-1, n // hop + 1):
        start = k * hop
        frame = min(max(k + 1, 0), grid.num_frames - 1)
        cutoff = float(np.clip(mvf.values[frame], 0.0, grid.sample_rate / 2.0))
        lowpass, highpass = _cutoff_filters(int(round(cutoff)), grid.sample_rate, num_taps)

        src = slice(pad + start - half, pad + start + window_len + half)
        vseg = np.convolve(vpad[src], lowpass, mode="valid")
        nseg = np.convolve(npad[src], highpass, mode="valid")
        local_rms = float(np.sqrt(np.mean(vpad[pad + start:pad + start + window_len] ** 2)))
        nseg = nseg * (noise_gain * local_rms)

        lo = max(start, 0)
        hi = min(start + window_len, n)
        if lo >= hi:
            continue
        sl = slice(lo - start, hi - start)
        voiced_out[lo:hi] += vseg[sl] * window[sl]
        noise_out[lo:hi] += nseg[sl] * window[sl]
    return ExcitationSignal(voiced_out + noise_out, voiced_out, noise_out)


# --- prototype training -----------------------------------------------------------

def _voiced_frame_mask(waveform: Waveform, grid: FrameGrid, contf0: FrameTrack) -> np.ndarray:
    """Frames whose normalized correlation at the pitch lag clears the gate."""
    sr = waveform.sample_rate
    width = grid.window_samples
    pad = width + int(math.ceil(sr / np.min(contf0.values))) + 2
    centered = waveform.samples - waveform.samples.mean()
    x = np.concatenate([np.zeros(pad), centered, np.zeros(pad)])
    mask = np.zeros(grid.num_frames, dtype=bool)
    for t in range(grid.num_frames):
        tau = int(round(sr / contf0.values[t]))
        start = pad + t * grid.shift_samples - width // 2
        a = x[start:start + width]
        b = x[start + tau:start + tau + width]
        denom = math.sqrt(float(a @ a) * float(b @ b))
        if denom > 1e-30:
            mask[t] = (float(a @ b) / denom) >= TRAIN_VOICING_THRESHOLD
    return mask


def train_residual_prototype(corpus, frame_length: int = 512, num_components: int = 1,
                             config: SynthesisConfig = SynthesisConfig()) -> ResidualPrototype:
    """Learn the excitation prototype from (Waveform, UtteranceFeatures) pairs.

    Inverse-filters each utterance, cuts two-period residual windows at
    peaks inside voiced regions, resamples them to `frame_length`,
    energy-normalizes, and keeps the top singular vectors of the collection
    (components are sign-fixed: largest-magnitude sample positive).
    """
    corpus = list(corpus)
    if not corpus:
        raise TrainingError("training corpus is empty")
    if num_components < 1:
        raise ValueError("num_components must be at least 1")

    collected = []
    for waveform, features in corpus:
        grid = features.grid
        residual = mglsa_inverse_filter(waveform, features.melcep, config)
        voiced = _voiced_frame_mask(waveform, grid, features.contf0)
        sr = waveform.sample_rate
        t = 0.0
        n = residual.size
        while t < n - 1:
            frame = min(int(t) // grid.shift_samples, grid.num_frames - 1)
            period = sr / features.contf0.values[frame]
            if voiced[frame]:
                lo = max(int(t - period / 2), 0)
                hi = min(int(t + period / 2) + 1, n)
                if hi - lo > 4:
                    mark = lo + int(np.argmax(np.abs(residual[lo:hi])))
                    a, b = mark - int(round(period)), mark + int(round(period))
                    if a >= 0 and b <= n and b - a >= 8:
                        cut = residual[a:b]
                        resampled = np.interp(
                            np.linspace(0.0, cut.size - 1.0, frame_length),
                            np.arange(cut.size), cut)
                        energy = np.linalg.norm(resampled)
                        if energy > 1e-12:
                            collected.append(resampled / energy)
            t += period
    if len(collected) < max(8, num_components):
        raise TrainingError("corpus contains no usable voiced material")

    matrix = np.array(collected)
    _, _, vt = np.linalg.svd(matrix, full_matrices=False)
    components = vt[:num_components].copy()
    for row in components:
        if row[int(np.argmax(np.abs(row)))] < 0:
            row *= -1.0
    return ResidualPrototype(components, matrix.mean(axis=0), num_components, frame_length,
                             training_frame_count=len(collected))


# --- full synthesis -----------------------------------------------------------------

def synthesize(features: UtteranceFeatures, prototype: ResidualPrototype,
               config: SynthesisConfig = SynthesisConfig()) -> Waveform:
    """Features -> waveform. Deterministic given the noise seed.

    Output duration is num_frames * frame_shift; the result is peak
    normalized to 0.99 (factor logged) only if it would otherwise clip.
    """
    grid = features.grid
    sr = features.source_sample_rate
    num_samples = grid.num_frames * grid.shift_samples
    voiced = generate_voiced_excitation(features.contf0, prototype, num_samples, sr)
    excitation = mix_excitation_mvf(voiced, features.mvf, grid, config.noise_seed,
                                    config.noise_gain, config.lowpass_taps)
    shaped = mglsa_synthesis_filter(excitation.samples, features.melcep, config)
    peak = float(np.max(np.abs(shaped))) if shaped.size else 0.0
    if peak > 0.99:
        factor = 0.99 / peak
        log.info("peak normalizing synthesized waveform by %.6f", factor)
        shaped = shaped * factor
    return Waveform(shaped, sr)
