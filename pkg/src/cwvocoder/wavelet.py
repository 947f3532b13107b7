"""Continuous wavelet transform over octave scale ladders.

Provides the Mexican-hat analysis bank, the approximate inverse that sums
rescaled coefficient rows back into a signal, and the passband calibration
constant that ties the two together. All functions are pure; decompositions
are plain data and safe to share across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal as sps

from .errors import CalibrationError

#: psi(0) of the unit-L2 Mexican hat, 2 / (sqrt(3) * pi**(1/4)).
MEXICAN_HAT_PEAK = 2.0 / (math.sqrt(3.0) * math.pi ** 0.25)

#: Center frequency in cycles per unit of dimensionless wavelet time: the
#: mean-squared scalogram response of a sinusoid with period P peaks at
#: scale ~ P * CENTER_FREQUENCY.
CENTER_FREQUENCY = math.sqrt(2.5) / (2.0 * math.pi)

DEFAULT_SUPPORT = 5.0

_CALIBRATION_POINTS_PER_OCTAVE = 48


def mexican_hat(t, support: float = DEFAULT_SUPPORT):
    """Evaluate the unit-L2 Mexican hat, truncated to zero for |t| > support.

    Accepts scalars or arrays; returns the same shape.
    """
    arr = np.asarray(t, dtype=float)
    out = MEXICAN_HAT_PEAK * (1.0 - arr * arr) * np.exp(-0.5 * arr * arr)
    out = np.where(np.abs(arr) > support, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class MotherWavelet:
    """Analysis wavelet: currently only the Mexican hat family."""

    kind: str = "mexican-hat"
    effective_support: float = DEFAULT_SUPPORT

    def __post_init__(self):
        if self.kind != "mexican-hat":
            raise ValueError(f"unsupported wavelet kind: {self.kind!r}")
        if not self.effective_support > 0:
            raise ValueError("effective_support must be positive")

    def __call__(self, t):
        return mexican_hat(t, self.effective_support)


MEXICAN_HAT = MotherWavelet()


@dataclass(frozen=True)
class ScaleLadder:
    """Strictly increasing, octave-spaced analysis scales.

    The vocoder pipeline uses the canonical 10-scale ladder; shorter ladders
    are permitted for calibration and diagnostics.
    """

    scales: tuple[float, ...]

    def __post_init__(self):
        if len(self.scales) < 1:
            raise ValueError("scale ladder needs at least one scale")
        if any(not (s > 0 and math.isfinite(s)) for s in self.scales):
            raise ValueError("scales must be positive and finite")
        for lo, hi in zip(self.scales, self.scales[1:]):
            if abs(hi / lo - 2.0) > 1e-12:
                raise ValueError("adjacent scales must be one octave apart")

    @property
    def base_scale(self) -> float:
        return self.scales[0]

    def __len__(self) -> int:
        return len(self.scales)

    def __iter__(self):
        return iter(self.scales)


def make_scale_ladder(base_scale: float, num_scales: int = 10) -> ScaleLadder:
    """Build an octave ladder: scales[i] = base_scale * 2**i."""
    if not (base_scale > 0 and math.isfinite(base_scale)):
        raise ValueError("base_scale must be positive")
    if num_scales < 1:
        raise ValueError("num_scales must be at least 1")
    return ScaleLadder(tuple(base_scale * 2.0 ** i for i in range(num_scales)))


@dataclass
class WaveletDecomposition:
    """CWT coefficients: one row per scale, one column per signal position."""

    coefficients: np.ndarray
    ladder: ScaleLadder
    signal_length: int
    signal_mean: float

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (len(self.ladder), self.signal_length):
            raise ValueError("coefficient matrix must be |ladder| x signal_length")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("coefficients must be finite")


@dataclass(frozen=True)
class ReconstructionReport:
    """RMS residual of an approximate inverse, absolute and signal-relative."""

    epsilon_rms: float
    epsilon_relative: float


def _kernel_halfwidth(scale: float, support: float) -> int:
    return int(math.floor(support * scale))


def cwt_forward(signal, ladder: ScaleLadder, wavelet: MotherWavelet = MEXICAN_HAT) -> WaveletDecomposition:
    """Forward transform of a 1-D signal against every ladder scale.

    The signal mean is removed first (the Mexican hat cannot see it) and
    recorded on the decomposition; boundaries use symmetric reflection.
    Row i holds scales[i]**-0.5 * sum_x f(x) * psi((x - b) / scales[i]).
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("signal must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal samples must be finite")

    n = x.size
    mean = float(x.mean())
    centered = x - mean

    support = wavelet.effective_support
    halfwidths = [_kernel_halfwidth(a, support) for a in ladder]
    pad = max(halfwidths)
    padded = np.pad(centered, pad, mode="symmetric")

    rows = np.empty((len(ladder), n))
    for i, (a, hw) in enumerate(zip(ladder, halfwidths)):
        offsets = np.arange(-hw, hw + 1)
        kernel = wavelet(offsets / a)
        # The kernel is even, so convolution equals correlation exactly.
        full = sps.convolve(padded, kernel, mode="valid", method="auto")
        start = pad - hw
        rows[i] = full[start:start + n] / math.sqrt(a)
    return WaveletDecomposition(rows, ladder, n, mean)


def cwt_inverse(decomp: WaveletDecomposition, recon_constant: float) -> np.ndarray:
    """Approximate inverse: mean + sum over scales of W_i / sqrt(a_i), rescaled.

    Widening the ladder (extra octaves) never increases reconstruction error
    on signals whose content the original ladder already covers.
    """
    if not (recon_constant > 0 and math.isfinite(recon_constant)):
        raise ValueError("recon_constant must be positive and finite")
    weights = 1.0 / np.sqrt(np.array(decomp.ladder.scales))
    summed = weights @ decomp.coefficients
    return decomp.signal_mean + summed / recon_constant


def reconstruction_error(original, reconstructed) -> ReconstructionReport:
    """RMS of (original - reconstructed), also relative to the original's RMS."""
    a = np.asarray(original, dtype=float)
    b = np.asarray(reconstructed, dtype=float)
    if a.shape != b.shape:
        raise ValueError("sequences must have equal length")
    eps_rms = float(np.sqrt(np.mean((a - b) ** 2)))
    ref_rms = float(np.sqrt(np.mean(a ** 2)))
    eps_rel = 0.0 if ref_rms == 0.0 else eps_rms / ref_rms
    return ReconstructionReport(epsilon_rms=eps_rms, epsilon_relative=eps_rel)


def _bank_gain(omega: np.ndarray, scales: tuple[float, ...], support: float) -> np.ndarray:
    """Frequency response of forward-transform-then-rescaled-sum at omega."""
    gain = np.zeros_like(omega)
    peak = mexican_hat(0.0, support)
    for a in scales:
        hw = _kernel_halfwidth(a, support)
        offsets = np.arange(1, hw + 1)
        taps = mexican_hat(offsets / a, support)
        acc = np.full_like(omega, peak)
        # chunk the outer product to bound memory at large scales
        for lo in range(0, offsets.size, 16384):
            chunk = offsets[lo:lo + 16384]
            acc += 2.0 * (np.cos(np.outer(omega, chunk)) @ taps[lo:lo + 16384])
        gain += acc / a
    return gain


@lru_cache(maxsize=64)
def _calibration_constant(scales: tuple[float, ...], support: float) -> float:
    a_min, a_max = min(scales), max(scales)
    omega_lo = math.sqrt(2.0) / a_max
    omega_hi = min(math.sqrt(2.0) / a_min, math.pi)
    if omega_hi <= omega_lo:
        omega = np.array([omega_hi])
    else:
        octaves = math.log2(omega_hi / omega_lo)
        count = max(33, int(_CALIBRATION_POINTS_PER_OCTAVE * octaves))
        omega = np.geomspace(omega_lo, omega_hi, count)
    gain = _bank_gain(omega, scales, support)
    constant = float(gain.max())
    if not (constant > 1e-12 and math.isfinite(constant)):
        raise CalibrationError("scale ladder produced no usable passband response")
    return constant


def calibrate_reconstruction_constant(ladder: ScaleLadder, wavelet: MotherWavelet = MEXICAN_HAT) -> float:
    """Reconstruction constant for cwt_inverse, computed once per ladder.

    Taken as the peak gain of the analysis-then-sum operator over the
    ladder's covered frequency band. Using the peak (rather than the band
    mean) keeps the per-frequency round-trip gain at or below one, so a
    round trip can never amplify any component of the input.
    """
    return _calibration_constant(ladder.scales, wavelet.effective_support)


def roundtrip(signal, ladder: ScaleLadder, wavelet: MotherWavelet = MEXICAN_HAT) -> tuple[np.ndarray, ReconstructionReport]:
    """Forward + calibrated inverse, with the residual report."""
    decomp = cwt_forward(signal, ladder, wavelet)
    constant = calibrate_reconstruction_constant(ladder, wavelet)
    recon = cwt_inverse(decomp, constant)
    return recon, reconstruction_error(signal, recon)


def write_decomposition_csv(decomp: WaveletDecomposition, path, magnitudes: bool = False) -> None:
    """Write one CSV row per scale: `scale,<b0>,<b1>,...` at 9 significant digits."""
    coeff = np.abs(decomp.coefficients) if magnitudes else decomp.coefficients
    with open(path, "w", encoding="ascii") as fh:
        header = ",".join(["scale"] + [str(b) for b in range(decomp.signal_length)])
        fh.write(header + "\n")
        for a, row in zip(decomp.ladder, coeff):
            cells = ",".join(f"{v:.9g}" for v in row)
            fh.write(f"{a:.9g},{cells}\n")


def read_decomposition_csv(path, signal_mean: float = 0.0) -> WaveletDecomposition:
    """Read the CSV matrix format back; the ladder comes from the scale column."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header.startswith("scale,"):
            raise ValueError(f"{path}: not a decomposition CSV (bad header)")
        scales = []
        rows = []
        for line in fh:
            cells = line.strip().split(",")
            scales.append(float(cells[0]))
            rows.append([float(v) for v in cells[1:]])
    matrix = np.array(rows)
    return WaveletDecomposition(matrix, ScaleLadder(tuple(scales)), matrix.shape[1], signal_mean)
