import numpy as np
import pytest

from cwvocoder import decomposition as dc
from cwvocoder import features as ft
from cwvocoder import wavelet as wv

SR = 16000


def synthetic_features(num_frames=400, order=8):
    grid = ft.FrameGrid(SR, 0.005, 0.025, num_frames)
    n = np.arange(num_frames)
    contf0 = 130.0 + 20.0 * np.sin(2.0 * np.pi * n / 120.0)
    mvf = 4000.0 + 1500.0 * np.sin(2.0 * np.pi * n / 200.0 + 0.4)
    rng = np.random.default_rng(12)
    cep = np.empty((num_frames, order + 1))
    for m in range(order + 1):
        period = 60.0 + 30.0 * m
        cep[:, m] = rng.normal() + 0.4 * np.sin(2.0 * np.pi * n / period + m)
    return ft.UtteranceFeatures(
        contf0=ft.FrameTrack(contf0, "contf0", grid),
        mvf=ft.FrameTrack(mvf, "mvf", grid),
        melcep=ft.MelCepstrumTrack(cep, order, 0.42, grid),
        source_sample_rate=SR,
    )


def test_constant_tracks_give_zero_matrices():
    grid = ft.FrameGrid(SR, 0.005, 0.025, 128)
    feats = ft.UtteranceFeatures(
        contf0=ft.FrameTrack(np.full(128, 140.0), "contf0", grid),
        mvf=ft.FrameTrack(np.full(128, 4500.0), "mvf", grid),
        melcep=ft.MelCepstrumTrack(np.tile([0.5, -0.2, 0.1], (128, 1)), 2, 0.42, grid),
        source_sample_rate=SR,
    )
    ladder = wv.make_scale_ladder(2.0, 10)
    decomp = dc.decompose_features(feats, ladder)
    assert np.max(np.abs(decomp.contf0.coefficients)) < 1e-10
    assert decomp.contf0.signal_mean == pytest.approx(140.0)
    assert np.max(np.abs(decomp.mvf.coefficients)) < 1e-9
    assert all(np.max(np.abs(d.coefficients)) < 1e-10 for d in decomp.melcep)


def test_roundtrip_within_budget_per_track():
    feats = synthetic_features()
    ladder = wv.make_scale_ladder(2.0, 10)
    recon = dc.recompose_features(dc.decompose_features(feats, ladder))
    for orig, back in [
        (feats.contf0.values, recon.contf0.values),
        (feats.mvf.values, recon.mvf.values),
    ]:
        assert wv.reconstruction_error(orig, back).epsilon_relative <= 0.05
    for m in range(feats.melcep.order + 1):
        report = wv.reconstruction_error(feats.melcep.coefficients[:, m],
                                         recon.melcep.coefficients[:, m])
        assert report.epsilon_relative <= 0.05


def test_single_frame_grid_roundtrip_exact():
    grid = ft.FrameGrid(SR, 0.005, 0.025, 1)
    feats = ft.UtteranceFeatures(
        contf0=ft.FrameTrack(np.array([123.0]), "contf0", grid),
        mvf=ft.FrameTrack(np.array([3500.0]), "mvf", grid),
        melcep=ft.MelCepstrumTrack(np.array([[0.7, 0.1]]), 1, 0.42, grid),
        source_sample_rate=SR,
    )
    ladder = wv.make_scale_ladder(2.0, 10)
    decomp = dc.decompose_features(feats, ladder)
    assert decomp.contf0.coefficients.shape == (10, 1)
    recon = dc.recompose_features(decomp)
    assert recon.contf0.values[0] == pytest.approx(123.0, abs=1e-9)
    assert recon.mvf.values[0] == pytest.approx(3500.0, abs=1e-9)
    assert np.allclose(recon.melcep.coefficients, feats.melcep.coefficients, atol=1e-9)


def test_identity_weights_match_plain_recompose():
    feats = synthetic_features(num_frames=256, order=3)
    ladder = wv.make_scale_ladder(2.0, 8)
    decomp = dc.decompose_features(feats, ladder)
    plain = dc.recompose_features(decomp)
    weighted = dc.recompose_features(decomp, dc.ScaleWeights.identity(8))
    assert np.array_equal(plain.contf0.values, weighted.contf0.values)
    assert np.array_equal(plain.melcep.coefficients, weighted.melcep.coefficients)


def test_zero_weights_collapse_to_means():
    feats = synthetic_features(num_frames=256, order=3)
    ladder = wv.make_scale_ladder(2.0, 8)
    decomp = dc.decompose_features(feats, ladder)
    flat = dc.recompose_features(decomp, dc.ScaleWeights(np.zeros(8)))
    assert np.ptp(flat.contf0.values) == 0.0
    assert flat.contf0.values[0] == pytest.approx(max(feats.contf0.values.mean(), 50.0))
    assert np.ptp(flat.mvf.values) == 0.0
    for m in range(4):
        assert np.ptp(flat.melcep.coefficients[:, m]) == 0.0


def test_weight_length_mismatch_rejected():
    feats = synthetic_features(num_frames=64, order=2)
    decomp = dc.decompose_features(feats, wv.make_scale_ladder(2.0, 6))
    with pytest.raises(ValueError):
        dc.recompose_features(decomp, dc.ScaleWeights(np.ones(5)))


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        dc.ScaleWeights(np.array([1.0, -0.5]))


def test_csv_export_import_roundtrip(tmp_path):
    feats = synthetic_features(num_frames=96, order=2)
    ladder = wv.make_scale_ladder(2.0, 6)
    decomp = dc.decompose_features(feats, ladder)
    written = dc.export_decomposition_csv(decomp, tmp_path, "utt01")
    names = {p.name for p in written}
    assert "utt01.contf0.cwt.csv" in names
    assert "utt01.mvf.cwt.csv" in names
    assert "utt01.c2.cwt.csv" in names
    assert "utt01.cwtmeta.json" in names

    back = dc.import_decomposition_csv(tmp_path, "utt01")
    assert back.ladder == decomp.ladder
    assert back.grid == decomp.grid
    # 9 significant digits in the CSV bound the round-trip error
    assert np.allclose(back.contf0.coefficients, decomp.contf0.coefficients, rtol=1e-8, atol=1e-8)
    assert back.contf0.signal_mean == pytest.approx(decomp.contf0.signal_mean)
    recon = dc.recompose_features(back)
    direct = dc.recompose_features(decomp)
    assert np.allclose(recon.contf0.values, direct.contf0.values, atol=1e-6)


def test_clamp_safety_under_arbitrary_weights():
    feats = synthetic_features(num_frames=128, order=2)
    ladder = wv.make_scale_ladder(2.0, 6)
    decomp = dc.decompose_features(feats, ladder)
    rng = np.random.default_rng(44)
    for _ in range(10):
        weights = dc.ScaleWeights(rng.uniform(0.0, 6.0, size=6))
        recon = dc.recompose_features(decomp, weights)  # validates invariants on build
        assert np.all(recon.contf0.values >= 50.0)
        assert np.all((recon.mvf.values >= 0.0) & (recon.mvf.values <= 8000.0))


def test_doubling_coarsest_scale_boosts_its_row():
    # Doubling the coarsest weight adds exactly one extra copy of that row's
    # reconstruction. Re-analyzing the boosted track shows the coarse row
    # grown by 1 + (its band's share of the bank gain) -- about 1.5x for
    # octave-spaced Mexican hats, since neighboring bands overlap -- while
    # rows two or more octaves finer stay put.
    n = np.arange(512)
    ladder = wv.make_scale_ladder(2.0, 5)  # coarsest scale 32 -> period ~127
    contour = 150.0 + 8.0 * np.sin(2.0 * np.pi * n / 127.0) + 3.0 * np.sin(2.0 * np.pi * n / 16.0)
    grid = ft.FrameGrid(SR, 0.005, 0.025, 512)
    feats = ft.UtteranceFeatures(
        contf0=ft.FrameTrack(contour, "contf0", grid),
        mvf=ft.FrameTrack(np.full(512, 4000.0), "mvf", grid),
        melcep=ft.MelCepstrumTrack(np.zeros((512, 2)), 1, 0.42, grid),
        source_sample_rate=SR,
    )
    decomp = dc.decompose_features(feats, ladder)
    weights = np.ones(5)
    weights[-1] = 2.0
    boosted = dc.recompose_features(decomp, dc.ScaleWeights(weights))
    baseline = dc.recompose_features(decomp)

    # exact linear pathway: the boost adds the coarse row's contribution once
    constant = wv.calibrate_reconstruction_constant(ladder)
    extra = decomp.contf0.coefficients[-1] / np.sqrt(ladder.scales[-1]) / constant
    assert np.allclose(boosted.contf0.values - baseline.contf0.values, extra, atol=1e-9)

    re_boost = wv.cwt_forward(boosted.contf0.values, ladder).coefficients
    re_base = wv.cwt_forward(baseline.contf0.values, ladder).coefficients
    interior = slice(160, 352)
    coarse_ratio = (np.linalg.norm(re_boost[-1, interior]) /
                    np.linalg.norm(re_base[-1, interior]))
    assert 1.4 <= coarse_ratio <= 1.7
    for row in range(2):  # rows two or more octaves below the boosted band
        fine_ratio = (np.linalg.norm(re_boost[row, interior]) /
                      np.linalg.norm(re_base[row, interior]))
        assert abs(fine_ratio - 1.0) <= 0.05
