"""Additive noise mixing at an exact target SNR.

The gain applied to the noise segment comes straight from the power ratio:
g = sqrt(P_clean / (P_noise * 10^(snr_db/10))), so the realized SNR of the
returned pair matches the requested one to measurement precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio import AudioSignal, power
from .errors import DspError


@dataclass(frozen=True)
class NoiseSource:
    """A full noise recording plus a short label used in reports."""

    signal: AudioSignal
    label: str = "noise"

    def __post_init__(self):
        if power(self.signal) <= 0.0:
            raise DspError(f"noise source '{self.label}' has zero power")


@dataclass(frozen=True)
class MixSpec:
    target_snr_db: float
    noise_offset_samples: int = 0
    seed: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.target_snr_db):
            raise DspError(f"target SNR must be finite, got {self.target_snr_db}")
        if self.noise_offset_samples < 0:
            raise DspError("noise offset must be nonnegative")


def snr_db(clean: AudioSignal, noise: AudioSignal) -> float:
    """Component SNR in dB of a clean/noise pair of equal length and rate."""
    if len(clean) != len(noise):
        raise DspError(f"length mismatch: clean {len(clean)} vs noise {len(noise)}")
    if clean.sample_rate_hz != noise.sample_rate_hz:
        raise DspError("sample rate mismatch between clean and noise")
    p_noise = power(noise)
    if p_noise <= 0.0:
        raise DspError("noise has zero power")
    p_clean = power(clean)
    if p_clean <= 0.0:
        raise DspError("clean signal has zero power")
    return 10.0 * math.log10(p_clean / p_noise)


def fit_noise(noise: NoiseSource, length: int, offset: int = 0) -> AudioSignal:
    """Cut `length` samples from the recording starting at `offset`, wrapping."""
    if length <= 0:
        raise DspError(f"requested noise length must be positive, got {length}")
    src = noise.signal.samples
    offset = int(offset) % src.size
    reps = (offset + length + src.size - 1) // src.size
    tiled = np.tile(src, reps)
    return AudioSignal(tiled[offset:offset + length], noise.signal.sample_rate_hz)


def mix_at_snr(
    clean: AudioSignal, noise: NoiseSource, spec: MixSpec
) -> tuple[AudioSignal, AudioSignal]:
    """Return (clean + scaled noise, scaled noise) hitting the target SNR.

    The mixture may exceed [-1, 1]; it stays at full precision here and is
    only peak-normalized when written out for listening.
    """
    if noise.signal.sample_rate_hz != clean.sample_rate_hz:
        raise DspError("resample the noise to the clean signal's rate before mixing")
    p_clean = power(clean)
    if p_clean <= 0.0:
        raise DspError("clean signal has zero power")
    segment = fit_noise(noise, len(clean), spec.noise_offset_samples)
    p_seg = power(segment)
    if p_seg <= 0.0:
        raise DspError("noise segment has zero power (silent region)")
    gain = math.sqrt(p_clean / (p_seg * 10.0 ** (spec.target_snr_db / 10.0)))
    scaled = segment.scaled(gain)
    mixed = AudioSignal(clean.samples + scaled.samples, clean.sample_rate_hz)
    return mixed, scaled
