"""Short-time objective intelligibility of a degraded signal against clean.

Follows the reference formulation: drop silent frames, take a Hann STFT,
collapse to one-third-octave band envelopes, then average the zero-mean
correlation between clean and normalized+clipped degraded envelope segments
over every band and every sliding segment.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .audio import AudioSignal
from .errors import DspError

_EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class StoiConfig:
    analysis_rate_hz: int = 10000
    frame_len: int = 256
    frame_hop: int = 128
    fft_len: int = 512
    n_bands: int = 15
    lowest_center_hz: float = 150.0
    segment_frames: int = 30
    silence_range_db: float = 40.0
    clip_bound_db: float = -15.0

    def __post_init__(self):
        if self.analysis_rate_hz <= 0:
            raise DspError("analysis rate must be positive")
        if self.frame_len <= 0 or self.frame_hop <= 0 or self.frame_len % self.frame_hop:
            raise DspError("frame_hop must divide frame_len")
        if self.fft_len < self.frame_len:
            raise DspError("fft_len must be at least frame_len")
        if self.n_bands < 1:
            raise DspError("need at least one band")
        if self.segment_frames < 2:
            raise DspError("segments need at least two frames")
        if self.lowest_center_hz <= 0 or self.silence_range_db <= 0:
            raise DspError("lowest_center_hz and silence_range_db must be positive")


@dataclass(frozen=True)
class StoiScore:
    value: float

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise DspError(f"non-finite intelligibility score: {self.value}")
        object.__setattr__(self, "value", float(self.value))

    def __float__(self) -> float:
        return self.value


def _hann(n: int) -> np.ndarray:
    # symmetric Hann without the zero endpoints, as in the reference code
    return np.hanning(n + 2)[1:-1]


@lru_cache(maxsize=8)
def _band_matrix_cached(rate: int, fft_len: int, n_bands: int, lowest: float) -> np.ndarray:
    f = rate * np.arange(fft_len // 2 + 1) / fft_len
    obm = np.zeros((n_bands, f.size))
    for j in range(n_bands):
        center = lowest * 2.0 ** (j / 3.0)
        lo = int(np.argmin(np.square(f - center * 2.0 ** (-1.0 / 6.0))))
        hi = int(np.argmin(np.square(f - center * 2.0 ** (1.0 / 6.0))))
        obm[j, lo:hi] = 1.0
    out = obm
    out.flags.writeable = False
    return out


def third_octave_band_matrix(config: StoiConfig) -> np.ndarray:
    """0/1 matrix mapping FFT bins to one-third-octave bands (rows disjoint)."""
    return _band_matrix_cached(
        config.analysis_rate_hz, config.fft_len, config.n_bands, config.lowest_center_hz
    )


def _frame_starts(n_samples: int, frame_len: int, hop: int) -> np.ndarray:
    # exclusive end, per the reference: the final full frame at exactly
    # n - frame_len is not taken
    return np.arange(0, max(n_samples - frame_len, 0), hop)


def remove_silent_frames(
    clean: AudioSignal, degraded: AudioSignal, config: StoiConfig
) -> tuple[AudioSignal, AudioSignal]:
    """Drop frames whose clean energy sits more than silence_range_db below
    the loudest clean frame, then overlap-add the survivors back."""
    if len(clean) != len(degraded):
        raise DspError("clean and degraded must be the same length")
    if clean.sample_rate_hz != config.analysis_rate_hz:
        raise DspError(
            f"expected {config.analysis_rate_hz} Hz input, got {clean.sample_rate_hz}"
        )
    w = _hann(config.frame_len)
    starts = _frame_starts(len(clean), config.frame_len, config.frame_hop)
    if starts.size == 0:
        raise DspError("signal shorter than one analysis frame")
    idx = starts[:, None] + np.arange(config.frame_len)
    c_frames = w * clean.samples[idx]
    d_frames = w * degraded.samples[idx]
    norms = np.linalg.norm(c_frames, axis=1)
    if np.max(norms) <= 0.0:
        raise DspError("every clean frame is silent")
    energies = 20.0 * np.log10(norms + _EPS)
    keep = energies > np.max(energies) - config.silence_range_db
    c_frames = c_frames[keep]
    d_frames = d_frames[keep]
    n_out = (c_frames.shape[0] - 1) * config.frame_hop + config.frame_len
    c_out = np.zeros(n_out)
    d_out = np.zeros(n_out)
    for i in range(c_frames.shape[0]):
        s = i * config.frame_hop
        c_out[s:s + config.frame_len] += c_frames[i]
        d_out[s:s + config.frame_len] += d_frames[i]
    return (
        AudioSignal(c_out, clean.sample_rate_hz),
        AudioSignal(d_out, degraded.sample_rate_hz),
    )


def _band_envelopes(x: np.ndarray, config: StoiConfig, obm: np.ndarray) -> np.ndarray:
    w = _hann(config.frame_len)
    starts = _frame_starts(x.size, config.frame_len, config.frame_hop)
    if starts.size == 0:
        raise DspError("too few frames for spectral analysis")
    frames = w * x[starts[:, None] + np.arange(config.frame_len)]
    spec = np.fft.rfft(frames, n=config.fft_len, axis=1)
    return np.sqrt(obm @ np.square(np.abs(spec)).T)  # (bands, frames)


def stoi(clean: AudioSignal, degraded: AudioSignal, config: StoiConfig = StoiConfig()) -> StoiScore:
    """Mean envelope correlation; higher predicts better intelligibility."""
    if clean.sample_rate_hz != degraded.sample_rate_hz:
        raise DspError("clean and degraded sample rates differ")
    if clean.sample_rate_hz != config.analysis_rate_hz:
        raise DspError(
            f"resample inputs to {config.analysis_rate_hz} Hz before scoring"
        )
    if len(clean) != len(degraded):
        if abs(len(clean) - len(degraded)) >= config.frame_len:
            raise DspError(
                f"length mismatch beyond one frame: {len(clean)} vs {len(degraded)}"
            )
        n = min(len(clean), len(degraded))
        clean = AudioSignal(clean.samples[:n], clean.sample_rate_hz)
        degraded = AudioSignal(degraded.samples[:n], degraded.sample_rate_hz)

    clean, degraded = remove_silent_frames(clean, degraded, config)
    obm = third_octave_band_matrix(config)
    x = _band_envelopes(clean.samples, config, obm)
    y = _band_envelopes(degraded.samples, config, obm)
    n_frames = x.shape[1]
    n = config.segment_frames
    if n_frames < n:
        raise DspError(
            f"only {n_frames} frames after silence removal, need {n}"
        )

    # (segments, bands, n) sliding views
    xs = np.lib.stride_tricks.sliding_window_view(x, n, axis=1).transpose(1, 0, 2)
    ys = np.lib.stride_tricks.sliding_window_view(y, n, axis=1).transpose(1, 0, 2)

    alpha = (np.linalg.norm(xs, axis=2, keepdims=True)
             / (np.linalg.norm(ys, axis=2, keepdims=True) + _EPS))
    clip = 10.0 ** (-config.clip_bound_db / 20.0)
    yp = np.minimum(ys * alpha, xs * (1.0 + clip))

    xz = xs - np.mean(xs, axis=2, keepdims=True)
    yz = yp - np.mean(yp, axis=2, keepdims=True)
    xz = xz / (np.linalg.norm(xz, axis=2, keepdims=True) + _EPS)
    yz = yz / (np.linalg.norm(yz, axis=2, keepdims=True) + _EPS)
    value = float(np.sum(xz * yz) / (xz.shape[0] * xz.shape[1]))
    return StoiScore(value)
