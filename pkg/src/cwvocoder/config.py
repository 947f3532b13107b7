"""Run configuration shared by the analysis/synthesis pipeline and the CLI."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields


@dataclass(frozen=True)
class RunConfig:
    """All pipeline tunables with their canonical defaults.

    `validate` names the offending flag so the CLI can report it verbatim.
    """

    sample_rate: int = 16000
    frame_shift: float = 0.005
    window_length: float = 0.025
    f0_floor: float = 50.0
    f0_ceil: float = 400.0
    order: int = 24
    alpha: float = 0.42
    fft_size: int = 1024
    base_scale: float = 2.0
    num_scales: int = 10
    drop_finest: int = 1
    noise_seed: int = 1234
    noise_gain: float = 1.0
    pade_order: int = 5
    lowpass_taps: int = 129

    def validate(self) -> None:
        def bad(flag, why):
            raise ValueError(f"invalid value for --{flag}: {why}")

        if self.sample_rate <= 0:
            bad("sample-rate", "must be positive")
        if not (0 < self.frame_shift < self.window_length):
            bad("frame-shift", "must satisfy 0 < frame_shift < window_length")
        if not (0 < self.f0_floor < self.f0_ceil < self.sample_rate / 2):
            bad("f0-floor", "must satisfy 0 < floor < ceil < Nyquist")
        if self.order < 1:
            bad("order", "must be at least 1")
        if not abs(self.alpha) < 1:
            bad("alpha", "must satisfy |alpha| < 1")
        if self.fft_size < 2 or self.fft_size & (self.fft_size - 1):
            bad("fft-size", "must be a power of two")
        if not (self.base_scale > 0 and math.isfinite(self.base_scale)):
            bad("base-scale", "must be positive")
        if self.num_scales < 1:
            bad("num-scales", "must be at least 1")
        if not (0 <= self.drop_finest < self.num_scales):
            bad("drop-finest", "must be in [0, num_scales)")
        if self.noise_gain < 0:
            bad("noise-gain", "must be non-negative")
        if self.pade_order not in (4, 5):
            bad("pade-order", "must be 4 or 5")
        if self.lowpass_taps < 3 or self.lowpass_taps % 2 == 0:
            bad("lowpass-taps", "must be odd and at least 3")

    def replaced(self, **kwargs) -> "RunConfig":
        """Copy with some fields overridden, re-validated."""
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        current.update(kwargs)
        cfg = RunConfig(**current)
        cfg.validate()
        return cfg


DEFAULT_CONFIG = RunConfig()
