#!/usr/bin/env python3
"""Regenerate the bundled synthetic test utterances under tests/data/.

Each utterance is a continuously voiced vowel sequence: a harmonic source
following a smooth F0 contour, shaped by crossfaded formant filters, with a
mild breath-noise floor above the harmonic band. Deterministic by seed.
"""
import sys
from pathlib import Path

import numpy as np
from scipy import signal as sps

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cwvocoder.wavio import Waveform, write_wav  # noqa: E402

SR = 16000
DURATION = 2.4
HARMONIC_CEILING = 4800.0

# Peterson-Barney-ish formant targets (Hz) and bandwidths
VOWELS = {
    "a": ([730.0, 1090.0, 2440.0], [90.0, 110.0, 160.0]),
    "i": ([270.0, 2290.0, 3010.0], [60.0, 100.0, 170.0]),
    "u": ([300.0, 870.0, 2240.0], [70.0, 90.0, 150.0]),
    "e": ([530.0, 1840.0, 2480.0], [80.0, 100.0, 160.0]),
}


def f0_contour(n, base_hz, seed):
    t = np.arange(n) / SR
    rng = np.random.default_rng(seed)
    drift = rng.uniform(0.5, 0.9)
    contour = base_hz * (1.0
                         - 0.08 * t / t[-1]                      # declination
                         + 0.05 * np.sin(2.0 * np.pi * drift * t)
                         + 0.02 * np.sin(2.0 * np.pi * 2.3 * t + 1.0))
    return contour


def harmonic_source(f0, seed):
    n = f0.size
    phase = 2.0 * np.pi * np.cumsum(f0) / SR
    h_max = int(HARMONIC_CEILING / np.max(f0))
    rng = np.random.default_rng(seed)
    x = np.zeros(n)
    for h in range(1, h_max + 1):
        x += (1.0 / h ** 0.5) * np.cos(h * phase + rng.uniform(0.0, 2.0 * np.pi))
    return x / np.max(np.abs(x))


def formant_filter(x, formants, bandwidths, scale):
    y = x
    for freq, bw in zip(formants, bandwidths):
        freq = min(freq * scale, SR / 2.0 - 200.0)
        r = np.exp(-np.pi * bw * scale / SR)
        theta = 2.0 * np.pi * freq / SR
        a = [1.0, -2.0 * r * np.cos(theta), r * r]
        y = sps.lfilter([1.0 - r], a, y)
    return y / (np.sqrt(np.mean(y ** 2)) + 1e-12)


def vowel_sequence(source, order, scale):
    n = source.size
    filtered = {v: formant_filter(source, *VOWELS[v], scale) for v in order}
    bounds = np.linspace(0, n, len(order) + 1).astype(int)
    fade = int(0.15 * SR)
    out = np.zeros(n)
    weight_total = np.zeros(n)
    for (vowel, lo, hi) in zip(order, bounds[:-1], bounds[1:]):
        wlo, whi = max(lo - fade // 2, 0), min(hi + fade // 2, n)
        w = np.ones(whi - wlo)
        ramp = min(fade, w.size // 2)
        if ramp > 1:
            edge = 0.5 * (1.0 - np.cos(np.pi * np.arange(ramp) / ramp))
            w[:ramp] = edge
            w[-ramp:] = edge[::-1]
        out[wlo:whi] += filtered[vowel][wlo:whi] * w
        weight_total[wlo:whi] += w
    return out / np.maximum(weight_total, 1e-6)


def breath_noise(n, seed):
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(n)
    taps = sps.firwin(257, HARMONIC_CEILING - 300.0, pass_zero=False, fs=SR)
    return sps.lfilter(taps, 1.0, noise)


def make_utterance(base_hz, formant_scale, seed):
    n = int(DURATION * SR)
    f0 = f0_contour(n, base_hz, seed)
    voiced = vowel_sequence(harmonic_source(f0, seed + 1), ["a", "i", "u", "e"], formant_scale)
    t = np.arange(n) / SR
    envelope = 0.75 + 0.25 * np.sin(2.0 * np.pi * 1.3 * t + 0.5) ** 2
    edge = int(0.05 * SR)
    taper = np.ones(n)
    taper[:edge] = 0.5 * (1.0 - np.cos(np.pi * np.arange(edge) / edge))
    taper = taper * taper[::-1]
    taper = np.maximum(taper, 0.15)  # never fully silent: continuous voicing
    x = voiced * envelope * taper
    x = x / np.sqrt(np.mean(x ** 2))
    x += 0.015 * breath_noise(n, seed + 2)
    return Waveform(0.55 * x / np.max(np.abs(x)), SR)


def main():
    out_dir = Path(__file__).resolve().parent.parent / "tests" / "data"
    out_dir.mkdir(parents=True, exist_ok=True)
    write_wav(out_dir / "male_synthetic.wav", make_utterance(112.0, 1.0, seed=101))
    write_wav(out_dir / "female_synthetic.wav", make_utterance(208.0, 1.17, seed=202))
    print(f"wrote 2 utterances to {out_dir}")


if __name__ == "__main__":
    main()
