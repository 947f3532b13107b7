"""Continuous-wavelet speech vocoder.

Analysis (continuous F0, maximum voiced frequency, mel-cepstral envelope),
CWT decomposition of the parameter tracks, excitation + spectral-filter
resynthesis, and objective quality metrics.
"""

from .config import DEFAULT_CONFIG, RunConfig
from .decomposition import (FeatureDecomposition, ScaleWeights, decompose_features,
                            export_decomposition_csv, import_decomposition_csv,
                            recompose_features)
from .errors import (AlignmentError, CalibrationError, FilterInstabilityError,
                     FormatError, TrainingError)
from .features import (FrameGrid, FrameTrack, MelCepstrumTrack, UtteranceFeatures,
                       analyze_utterance, decode_envelope, envelope_to_melcepstrum,
                       estimate_mvf, extract_spectral_envelope, make_frame_grid,
                       melcepstrum_to_envelope, refine_contf0_cwt, track_contf0)
from .formats import read_features, read_prototype, write_features, write_prototype
from .metrics import EvaluationReport, evaluate_pair, f0_rmse, mcd
from .synthesis import (ExcitationSignal, ResidualPrototype, SynthesisConfig,
                        generate_voiced_excitation, mglsa_inverse_filter,
                        mglsa_synthesis_filter, mix_excitation_mvf, synthesize,
                        train_residual_prototype, unit_pulse_prototype)
from .wavelet import (MEXICAN_HAT, MotherWavelet, ReconstructionReport, ScaleLadder,
                      WaveletDecomposition, calibrate_reconstruction_constant,
                      cwt_forward, cwt_inverse, make_scale_ladder, mexican_hat,
                      reconstruction_error, roundtrip)
from .wavio import Waveform, read_wav, write_wav

__version__ = "0.1.0"
