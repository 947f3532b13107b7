"""Command-line pipeline: analyze / synth / copysyn / decompose / scalogram /
eval / train-prototype over WAV files and the package's binary formats.

Exit codes are a stable scripting contract: 0 success, 2 input or format
error, 3 output error, 4 processing failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import decomposition as dc
from . import features as ft
from . import formats
from . import metrics as mt
from . import synthesis as sy
from . import wavelet as wv
from . import wavio
from .config import RunConfig
from .errors import (AlignmentError, CalibrationError, FilterInstabilityError,
                     FormatError, TrainingError)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_OUTPUT = 3
EXIT_PROCESSING = 4

#: waveform-domain scalograms use a coarser base scale, in samples
WAVEFORM_BASE_SCALE = 16.0


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig(
        f0_floor=args.f0_floor, f0_ceil=args.f0_ceil,
        order=args.order, alpha=args.alpha,
        base_scale=args.base_scale, num_scales=args.num_scales,
        drop_finest=args.drop_finest,
        noise_seed=args.seed, noise_gain=args.noise_gain,
    )
    cfg.validate()
    return cfg


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--order", type=int, default=24, help="mel-cepstrum order")
    parser.add_argument("--alpha", type=float, default=0.42, help="all-pass warping factor")
    parser.add_argument("--f0-floor", dest="f0_floor", type=float, default=50.0)
    parser.add_argument("--f0-ceil", dest="f0_ceil", type=float, default=400.0)
    parser.add_argument("--base-scale", dest="base_scale", type=float, default=2.0,
                        help="finest wavelet scale in frames")
    parser.add_argument("--num-scales", dest="num_scales", type=int, default=10)
    parser.add_argument("--drop-finest", dest="drop_finest", type=int, default=1)
    parser.add_argument("--seed", type=int, default=1234, help="noise seed")
    parser.add_argument("--noise-gain", dest="noise_gain", type=float, default=1.0)


def _read_wav_checked(path, cfg: RunConfig) -> wavio.Waveform:
    return wavio.read_wav(path, expected_rate=cfg.sample_rate)


def _synthesis_config(cfg: RunConfig) -> sy.SynthesisConfig:
    return sy.SynthesisConfig(noise_seed=cfg.noise_seed, pade_order=cfg.pade_order,
                              lowpass_taps=cfg.lowpass_taps, alpha=cfg.alpha,
                              noise_gain=cfg.noise_gain)


def _parse_scale_weights(text: str, num_scales: int) -> dc.ScaleWeights:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ValueError(f"--scale-weights must be comma-separated numbers: {exc}")
    if len(values) != num_scales:
        raise ValueError(f"--scale-weights needs {num_scales} values, got {len(values)}")
    return dc.ScaleWeights(np.array(values))


# --- commands -----------------------------------------------------------------

def cmd_analyze(args) -> int:
    try:
        cfg = _config_from_args(args)
        wave = _read_wav_checked(args.input, cfg)
    except (FormatError, FileNotFoundError, ValueError, OSError) as exc:
        return _fail(EXIT_INPUT, str(exc))
    feats = ft.analyze_utterance(wave, cfg)
    try:
        formats.write_features(args.output, feats)
    except OSError as exc:
        return _fail(EXIT_OUTPUT, f"cannot write {args.output}: {exc}")
    print(f"{args.output}: {feats.grid.num_frames} frames, "
          f"{feats.advertised_dimension} parameters per frame "
          f"({feats.melcep.order} mel-cepstrum + 1 MVF + 1 contF0; "
          f"{feats.melcep.order + 3} stored with gain)")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        cfg = _config_from_args(args)
        feats = formats.read_features(args.features)
        proto = formats.read_prototype(args.prototype)
    except (FormatError, FileNotFoundError, ValueError, OSError) as exc:
        return _fail(EXIT_INPUT, str(exc))
    try:
        wave = sy.synthesize(feats, proto, _synthesis_config(cfg))
    except (FilterInstabilityError, CalibrationError) as exc:
        return _fail(EXIT_PROCESSING, str(exc))
    try:
        wavio.write_wav(args.output, wave)
    except OSError as exc:
        return _fail(EXIT_OUTPUT, f"cannot write {args.output}: {exc}")
    print(f"{args.output}: {wave.samples.size} samples at {wave.sample_rate} Hz")
    return EXIT_OK


def cmd_copysyn(args) -> int:
    try:
        cfg = _config_from_args(args)
        wave = _read_wav_checked(args.input, cfg)
        prototype = formats.read_prototype(args.prototype) if args.prototype else None
        weights = (_parse_scale_weights(args.scale_weights, cfg.num_scales)
                   if args.scale_weights else None)
    except (FormatError, FileNotFoundError, ValueError, OSError) as exc:
        return _fail(EXIT_INPUT, str(exc))

    feats = ft.analyze_utterance(wave, cfg)
    try:
        if prototype is None:
            prototype = sy.train_residual_prototype([(wave, feats)],
                                                    config=_synthesis_config(cfg))
        if args.cwt_roundtrip or weights is not None:
            ladder = wv.make_scale_ladder(cfg.base_scale, cfg.num_scales)
            decomp = dc.decompose_features(feats, ladder)
            if cfg.drop_finest:
                # pitch refinement: the finest contF0 scales carry tracking
                # noise, not intonation
                decomp.contf0.coefficients[:cfg.drop_finest] = 0.0
            feats = dc.recompose_features(decomp, weights, f0_floor=cfg.f0_floor)
        out_wave = sy.synthesize(feats, prototype, _synthesis_config(cfg))
    except (TrainingError, FilterInstabilityError, CalibrationError) as exc:
        return _fail(EXIT_PROCESSING, str(exc))
    try:
        wavio.write_wav(args.output, out_wave)
    except OSError as exc:
        return _fail(EXIT_OUTPUT, f"cannot write {args.output}: {exc}")

    if args.report:
        try:
            report = mt.evaluate_pair(wave, out_wave, cfg)
        except AlignmentError as exc:
            return _fail(EXIT_PROCESSING, str(exc))
        print(json.dumps({
            "utterance": Path(args.input).stem,
            "mcd_db": round(report.mcd_db, 6),
            "f0_rmse_hz": round(report.f0_rmse_hz, 6),
            "num_frames": report.num_frames,
        }))
    else:
        print(f"{args.output}: copy-synthesis complete")
    return EXIT_OK


def _track_values(feats: ft.UtteranceFeatures, name: str) -> np.ndarray:
    if name == "contf0":
        return feats.contf0.values
    if name == "mvf":
        return feats.mvf.values
    if name.startswith("c") and name[1:].isdigit():
        index = int(name[1:])
        if index <= feats.melcep.order:
            return feats.melcep.coefficients[:, index]
    valid = "contf0, mvf, c0..c" + str(feats.melcep.order)
    raise ValueError(f"unknown track {name!r}; valid tracks: {valid}")


def cmd_decompose(args) -> int:
    try:
        cfg = _config_from_args(args)
        feats = formats.read_features(args.features)
        values = _track_values(feats, args.track)
    except (FormatError, FileNotFoundError, ValueError, OSError) as exc:
        return _fail(EXIT_INPUT, str(exc))
    ladder = wv.make_scale_ladder(cfg.base_scale, cfg.num_scales)
    decomp = wv.cwt_forward(values, ladder)
    try:
        wv.write_decomposition_csv(decomp, args.output)
    except OSError as exc:
        return _fail(EXIT_OUTPUT, f"cannot write {args.output}: {exc}")
    print(f"{args.output}: {len(ladder)} scales x {decomp.signal_length} frames")
    return EXIT_OK


def cmd_scalogram(args) -> int:
    try:
        cfg = _config_from_args(args)
        wave = _read_wav_checked(args.input, cfg)
    except (FormatError, FileNotFoundError, ValueError, OSError) as exc:
        return _fail(EXIT_INPUT, str(exc))
    ladder = wv.make_scale_ladder(args.base_scale_samples, cfg.num_scales)
    decomp = wv.cwt_forward(wave.samples, ladder)
    try:
        wv.write_decomposition_csv(decomp, args.output, magnitudes=True)
    except OSError as exc:
        return _fail(EXIT_OUTPUT, f"cannot write {args.output}: {exc}")
    print(f"{args.output}: {len(ladder)} scales x {decomp.signal_length} samples")
    return EXIT_OK


def _wav_listing(path: Path) -> dict[str, Path]:
    if path.is_dir():
        return {p.stem: p for p in sorted(path.glob("*.wav"))}
    return {path.stem: path}


def cmd_eval(args) -> int:
    try:
        cfg = _config_from_args(args)
    except ValueError as exc:
        return _fail(EXIT_INPUT, str(exc))
    ref_root, syn_root = Path(args.reference), Path(args.synthesized)
    if not ref_root.exists() or not syn_root.exists():
        return _fail(EXIT_INPUT, "reference or synthesized path does not exist")
    if ref_root.is_file() and syn_root.is_file():
        # two bare files pair directly, whatever their names
        ref_files = {ref_root.stem: ref_root}
        syn_files = {ref_root.stem: syn_root}
    else:
        ref_files = _wav_listing(ref_root)
        syn_files = _wav_listing(syn_root)
    names = sorted(ref_files)
    skipped = 0
    for name in names:
        if name not in syn_files:
            print(f"warning: no match for {name}, pair skipped", file=sys.stderr)
            skipped += 1

    def run_pair(name):
        ref = wavio.read_wav(ref_files[name], expected_rate=cfg.sample_rate)
        syn = wavio.read_wav(syn_files[name], expected_rate=cfg.sample_rate)
        return name, mt.evaluate_pair(ref, syn, cfg)

    matched = [n for n in names if n in syn_files]
    results = {}
    failures = []
    with ThreadPoolExecutor(max_workers=max(args.jobs, 1)) as pool:
        for outcome in pool.map(lambda n: _guarded(run_pair, n), matched):
            if isinstance(outcome, tuple):
                results[outcome[0]] = outcome[1]
            else:
                failures.append(outcome)
    for failure in failures:
        print(f"warning: {failure}", file=sys.stderr)
        skipped += 1

    lines = []
    for name in matched:
        if name not in results:
            continue
        report = results[name]
        lines.append({
            "utterance": name,
            "mcd_db": round(report.mcd_db, 6),
            "f0_rmse_hz": round(report.f0_rmse_hz, 6),
            "num_frames": report.num_frames,
        })
    summary = {
        "summary": {
            "pairs": len(lines),
            "skipped": skipped,
            "mcd_db": mt.corpus_summary(r["mcd_db"] for r in lines),
            "f0_rmse_hz": mt.corpus_summary(r["f0_rmse_hz"] for r in lines),
        }
    }
    for line in lines:
        print(json.dumps(line))
    print(json.dumps(summary))
    if not lines and skipped:
        return EXIT_PROCESSING
    return EXIT_OK


def _guarded(fn, *args):
    try:
        return fn(*args)
    except (FormatError, AlignmentError, ValueError, OSError) as exc:
        return str(exc)


def cmd_train_prototype(args) -> int:
    try:
        cfg = _config_from_args(args)
    except ValueError as exc:
        return _fail(EXIT_INPUT, str(exc))
    corpus_dir = Path(args.corpus)
    files = sorted(corpus_dir.glob("*.wav")) if corpus_dir.is_dir() else []
    if not files:
        return _fail(EXIT_INPUT, f"{args.corpus}: no WAV files found")

    def analyze_one(path):
        wave = wavio.read_wav(path, expected_rate=cfg.sample_rate)
        return wave, ft.analyze_utterance(wave, cfg)

    try:
        with ThreadPoolExecutor(max_workers=max(args.jobs, 1)) as pool:
            corpus = list(pool.map(analyze_one, files))
        prototype = sy.train_residual_prototype(corpus, config=_synthesis_config(cfg))
    except (FormatError, FileNotFoundError, ValueError, OSError) as exc:
        return _fail(EXIT_INPUT, str(exc))
    except TrainingError as exc:
        return _fail(EXIT_PROCESSING, str(exc))
    try:
        formats.write_prototype(args.output, prototype)
    except OSError as exc:
        return _fail(EXIT_OUTPUT, f"cannot write {args.output}: {exc}")
    used = prototype.training_frame_count
    print(f"{args.output}: {prototype.num_components} component(s) of "
          f"{prototype.frame_length} samples from {used} residual frames")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cwvoc",
        description="Continuous-wavelet speech vocoder pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="extract features from a WAV into a CWVF file")
    p.add_argument("input")
    p.add_argument("output")
    _add_config_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="synthesize a WAV from a CWVF feature file")
    p.add_argument("features")
    p.add_argument("prototype")
    p.add_argument("output")
    _add_config_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("copysyn", help="analyze and resynthesize one utterance")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--prototype", help="CWRP file; trained from the input when omitted")
    p.add_argument("--cwt-roundtrip", dest="cwt_roundtrip", action="store_true",
                   help="decompose and recompose every track before synthesis")
    p.add_argument("--scale-weights", dest="scale_weights",
                   help="comma-separated per-scale weights (implies --cwt-roundtrip)")
    p.add_argument("--report", action="store_true",
                   help="evaluate the output against the input and print JSON")
    _add_config_flags(p)
    p.set_defaults(func=cmd_copysyn)

    p = sub.add_parser("decompose", help="CWT of one feature track to CSV")
    p.add_argument("features")
    p.add_argument("output")
    p.add_argument("--track", required=True,
                   help="contf0, mvf, or c0..cN (mel-cepstral coefficient)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("scalogram", help="CWT magnitude of a waveform to CSV")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--base-scale-samples", dest="base_scale_samples", type=float,
                   default=WAVEFORM_BASE_SCALE,
                   help="finest scale in samples for waveform analysis")
    _add_config_flags(p)
    p.set_defaults(func=cmd_scalogram)

    p = sub.add_parser("eval", help="mel-cepstral distortion and F0 RMSE of pairs")
    p.add_argument("reference", help="reference WAV file or directory")
    p.add_argument("synthesized", help="synthesized WAV file or directory")
    p.add_argument("--json", action="store_true", help="JSON lines output (always on)")
    p.add_argument("--jobs", type=int, default=1)
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train-prototype", help="learn a residual prototype from a corpus")
    p.add_argument("corpus", help="directory of WAV files")
    p.add_argument("output", help="CWRP file to write")
    p.add_argument("--jobs", type=int, default=1)
    _add_config_flags(p)
    p.set_defaults(func=cmd_train_prototype)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
