"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its measured figure and runtime."""
import json
import math
import shutil
import time

import numpy as np
import pytest

from cwvocoder import cli
from cwvocoder import features as ft
from cwvocoder import metrics as mt
from cwvocoder import synthesis as sy
from cwvocoder import wavelet as wv
from cwvocoder.wavio import Waveform

from conftest import DATA_DIR
from reference import ref_cwt_fastinner, ref_f0_rmse, ref_mcd_db, trapezoid

SR = 16000
MALE = DATA_DIR / "male_synthetic.wav"
FEMALE = DATA_DIR / "female_synthetic.wav"


class Criterion:
    def __init__(self, number, label, budget_s=None):
        self.number = number
        self.label = label
        self.budget_s = budget_s

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        status = "PASS" if exc_type is None else "FAIL"
        print(f"[acceptance {self.number}] {status}: {self.label} ({elapsed:.2f}s)")
        if exc_type is None and self.budget_s is not None:
            assert elapsed < self.budget_s, (
                f"criterion {self.number} exceeded its {self.budget_s}s runtime budget"
            )
        return False


def test_01_cwt_oracle_equivalence():
    with Criterion(1, "forward CWT matches the direct double-loop oracle to 1e-9", 10.0):
        rng = np.random.default_rng(2024)
        cases = []
        for _ in range(45):
            n = int(rng.integers(8, 257))
            base = float(rng.choice([0.7, 1.0, 1.4, 2.0]))
            count = int(rng.integers(3, 8))
            cases.append((rng.standard_normal(n), base, count))
        for _ in range(5):
            n = int(rng.integers(32, 129))
            cases.append((rng.standard_normal(n), 1.0, 10))
        worst = 0.0
        for signal, base, count in cases:
            ladder = wv.make_scale_ladder(base, count)
            got = wv.cwt_forward(signal, ladder).coefficients
            want = ref_cwt_fastinner(signal, ladder.scales)
            err = np.max(np.abs(got - want)) / max(np.max(np.abs(want)), 1e-300)
            worst = max(worst, err)
        assert worst < 1e-9, f"worst relative deviation {worst:.3e}"


def test_02_roundtrip_budget():
    with Criterion(2, "smooth contours reconstruct within 5% relative RMS", 1.0):
        n = np.arange(512)
        ladder = wv.make_scale_ladder(2.0, 10)
        signals = [
            np.full(512, 42.0),
            100.0 + 20.0 * np.sin(2.0 * np.pi * n / 64.0),
            np.interp(n, [0, 170, 340, 511], [80.0, 140.0, 100.0, 120.0]),
        ]
        for signal in signals:
            _, report = wv.roundtrip(signal, ladder)
            assert report.epsilon_relative <= 0.05, report


def test_03_mexican_hat_properties():
    with Criterion(3, "Mexican hat: zero mean, exact zeros at +-1, even symmetry"):
        t, dt = np.linspace(-8.0, 8.0, 1_600_001, retstep=True)
        integral = trapezoid(wv.mexican_hat(t, support=8.0), dx=dt)
        assert abs(integral) < 1e-6
        assert wv.mexican_hat(1.0) == 0.0
        assert wv.mexican_hat(-1.0) == 0.0
        grid = np.linspace(0.0, 6.0, 10_000)
        assert np.array_equal(wv.mexican_hat(grid), wv.mexican_hat(-grid))


def test_04_metric_exactness():
    with Criterion(4, "metrics match naive references to 1e-9; hand cases exact"):
        rng = np.random.default_rng(7)
        grid = lambda frames: ft.FrameGrid(SR, 0.005, 0.025, frames)
        for _ in range(100):
            frames = int(rng.integers(1, 16))
            order = int(rng.integers(1, 10))
            ref = rng.standard_normal((frames, order + 1))
            syn = rng.standard_normal((frames, order + 1))
            got = mt.mcd(
                ft.MelCepstrumTrack(ref, order, 0.42, grid(frames)),
                ft.MelCepstrumTrack(syn, order, 0.42, grid(frames)))
            assert got == pytest.approx(ref_mcd_db(ref, syn), rel=1e-9, abs=1e-12)
            a = 80.0 + 200.0 * rng.random(frames)
            b = 80.0 + 200.0 * rng.random(frames)
            got_rmse = mt.f0_rmse(
                ft.FrameTrack(a, "contf0", grid(frames)),
                ft.FrameTrack(b, "contf0", grid(frames)))
            assert got_rmse == pytest.approx(ref_f0_rmse(a, b), rel=1e-9, abs=1e-12)
        hand_ref = np.zeros((1, 25))
        hand_syn = np.zeros((1, 25))
        hand_syn[0, 5] = 0.1
        hand = mt.mcd(ft.MelCepstrumTrack(hand_ref, 24, 0.42, grid(1)),
                      ft.MelCepstrumTrack(hand_syn, 24, 0.42, grid(1)))
        assert hand == pytest.approx(0.434294, abs=1e-6)
        vals = 100.0 + 50.0 * rng.random(32)
        offset = mt.f0_rmse(ft.FrameTrack(vals, "contf0", grid(32)),
                            ft.FrameTrack(vals + 2.0, "contf0", grid(32)))
        assert offset == pytest.approx(2.0, abs=1e-12)


def test_05_refinement_improves_corrupted_tracks():
    with Criterion(5, "CWT refinement beats the corrupted track in >= 19/20 trials", 5.0):
        rng = np.random.default_rng(99)
        ladder = wv.make_scale_ladder(2.0, 10)
        grid = ft.FrameGrid(SR, 0.005, 0.025, 350)
        n = np.arange(350)
        improved = 0
        for trial in range(20):
            period = float(rng.uniform(90.0, 220.0))
            clean = 115.0 + float(rng.uniform(8.0, 16.0)) * np.sin(2.0 * np.pi * n / period)
            corrupted = clean.copy()
            spikes = rng.choice(np.arange(15, 335), size=5, replace=False)
            corrupted[spikes] = clean[spikes] * 2.0
            track = ft.FrameTrack(corrupted, "contf0", grid)
            refined = ft.refine_contf0_cwt(track, ladder, drop_finest=1)
            before = math.sqrt(np.mean((corrupted - clean) ** 2))
            after = math.sqrt(np.mean((refined.values - clean) ** 2))
            improved += after < before
        assert improved >= 19, f"improved only {improved}/20"


def test_06_mglsa_spectral_fidelity():
    with Criterion(6, "filtered noise spectrum within 1.0 dB RMS of decoded envelope", 5.0):
        rng = np.random.default_rng(42)
        cep = rng.standard_normal(25) * (0.6 / (1.0 + np.arange(25)) ** 0.8)
        cep[0] = 0.25
        n = 1 << 16
        grid = ft.FrameGrid(SR, 0.005, 0.025, n // 80 + 1)
        track = ft.MelCepstrumTrack(np.tile(cep, (grid.num_frames, 1)), 24, 0.42, grid)
        noise = np.random.default_rng(43).standard_normal(n)
        out = sy.mglsa_synthesis_filter(noise, track)
        seg = 4096
        frames = out[: (n // seg) * seg].reshape(-1, seg)
        psd = np.mean(np.abs(np.fft.rfft(frames, axis=1)) ** 2, axis=0) / seg
        measured_db = np.convolve(10.0 * np.log10(np.maximum(psd, 1e-30)),
                                  np.ones(9) / 9, mode="same")
        freq = np.arange(seg // 2 + 1) * SR / seg
        target_db = ft.decode_envelope(cep, 0.42, 2.0 * np.pi * freq / SR) * (20.0 / math.log(10.0))
        band = (freq >= 100.0) & (freq <= 7000.0)
        rms = math.sqrt(np.mean((measured_db[band] - target_db[band]) ** 2))
        assert rms <= 1.0, f"spectral deviation {rms:.3f} dB RMS"


def test_07_mvf_mixing_split():
    with Criterion(7, "4 kHz MVF mixing: >= 30 dB band separation both ways", 2.0):
        n = SR
        grid = ft.FrameGrid(SR, 0.005, 0.025, n // 80 + 1)
        voiced = 0.5 * np.random.default_rng(11).standard_normal(n)
        mvf = ft.FrameTrack(np.full(grid.num_frames, 4000.0), "mvf", grid)
        mixed = sy.mix_excitation_mvf(voiced, mvf, grid, seed=5)

        def band_energy(x, lo, hi):
            spectrum = np.abs(np.fft.rfft(x)) ** 2
            freq = np.arange(spectrum.size) * SR / x.size
            return float(spectrum[(freq >= lo) & (freq < hi)].sum())

        v_ratio = 10.0 * math.log10(band_energy(mixed.voiced_part, 0, 3000)
                                    / band_energy(mixed.voiced_part, 5000, 8000))
        n_ratio = 10.0 * math.log10(band_energy(mixed.noise_part, 5000, 8000)
                                    / band_energy(mixed.noise_part, 0, 3000))
        assert v_ratio >= 30.0, f"voiced split only {v_ratio:.1f} dB"
        assert n_ratio >= 30.0, f"noise split only {n_ratio:.1f} dB"


def test_08_pitch_realization():
    with Criterion(8, "constant-F0 excitation lags: 160 +- 1 at 100 Hz, 80 +- 1 at 200 Hz"):
        proto = sy.unit_pulse_prototype()
        for f0, lag, lo, hi in [(100.0, 160, 100, 320), (200.0, 80, 50, 140)]:
            n = int(0.6 * SR)
            grid = ft.FrameGrid(SR, 0.005, 0.025, n // 80 + 1)
            track = ft.FrameTrack(np.full(grid.num_frames, f0), "contf0", grid)
            x = sy.generate_voiced_excitation(track, proto, n, SR)
            ac = np.correlate(x, x, mode="full")[x.size - 1:]
            got = lo + int(np.argmax(ac[lo:hi + 1]))
            assert abs(got - lag) <= 1, f"{f0} Hz: lag {got}"


def test_09_end_to_end_copy_synthesis(tmp_path, capsys):
    with Criterion(9, "copysyn --report: MCD <= 5.0 dB and F0 RMSE <= 8.0 Hz", 30.0):
        for source in (MALE, FEMALE):
            out = tmp_path / f"cs_{source.stem}.wav"
            code = cli.main(["copysyn", str(source), str(out), "--report"])
            assert code == 0
            report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
            assert report["mcd_db"] <= 5.0, report
            assert report["f0_rmse_hz"] <= 8.0, report


def test_10_parameter_bookkeeping(tmp_path, capsys):
    with Criterion(10, "analyze advertises 26 parameters per frame (24 + 1 + 1)"):
        out = tmp_path / "male.cwvf"
        assert cli.main(["analyze", str(MALE), str(out)]) == 0
        printed = capsys.readouterr().out
        assert "26 parameters per frame" in printed
        assert "24 mel-cepstrum + 1 MVF + 1 contF0" in printed
        wave = Waveform(np.zeros(SR) + 0.01, SR)
        feats = ft.analyze_utterance(wave)
        assert feats.advertised_dimension == 26


def test_11_determinism(tmp_path):
    with Criterion(11, "byte-identical reruns: analyze twice, synth twice (fixed seed)"):
        a, b = tmp_path / "a.cwvf", tmp_path / "b.cwvf"
        assert cli.main(["analyze", str(MALE), str(a)]) == 0
        assert cli.main(["analyze", str(MALE), str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

        corpus = tmp_path / "corpus"
        corpus.mkdir()
        shutil.copy(MALE, corpus / "male.wav")
        proto = tmp_path / "proto.cwrp"
        assert cli.main(["train-prototype", str(corpus), str(proto)]) == 0
        w1, w2 = tmp_path / "s1.wav", tmp_path / "s2.wav"
        assert cli.main(["synth", str(a), str(proto), str(w1), "--seed", "77"]) == 0
        assert cli.main(["synth", str(a), str(proto), str(w2), "--seed", "77"]) == 0
        assert w1.read_bytes() == w2.read_bytes()
