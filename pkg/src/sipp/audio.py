"""Waveform container, WAV I/O, resampling, and signal power.

Audio is kept as float64 throughout; WAV files are the only place where
amplitudes get quantized. Supported encodings: 16-bit integer PCM and
32-bit float, mono or stereo on read; 16-bit mono on write.
"""

from __future__ import annotations

import io
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import firwin, resample_poly

from .errors import AudioIOError, ClipWarning, DspError

_PCM_SCALE = 32768.0

# Kaiser beta for >= 80 dB stopband attenuation: 0.1102 * (80 - 8.7)
_KAISER_BETA = 7.857


@dataclass(frozen=True)
class AudioSignal:
    """Mono waveform: amplitudes nominally in [-1, 1] plus a sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if int(self.sample_rate_hz) <= 0:
            raise DspError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise DspError("signal contains NaN or Inf samples")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def scaled(self, gain: float) -> "AudioSignal":
        return AudioSignal(self.samples * float(gain), self.sample_rate_hz)


def power(signal: AudioSignal) -> float:
    """Mean of squared amplitudes over the whole signal."""
    if len(signal) == 0:
        raise DspError("power of an empty signal is undefined")
    return float(np.mean(np.square(signal.samples)))


def _parse_wav(data: bytes, origin: str) -> AudioSignal:
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioIOError(f"{origin}: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    payload = None
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + chunk_size]
        if chunk_id == b"fmt " and len(body) >= 16:
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned
    if fmt is None:
        raise AudioIOError(f"{origin}: missing fmt chunk")
    if payload is None or len(payload) == 0:
        raise AudioIOError(f"{origin}: zero-length data chunk")

    audio_format, channels, rate, _, _, bits = fmt
    if channels not in (1, 2):
        raise AudioIOError(f"{origin}: {channels} channels unsupported (want 1 or 2)")
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload, dtype="<i2")
        samples = raw.astype(np.float64) / _PCM_SCALE
    elif audio_format == 3 and bits == 32:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise AudioIOError(
            f"{origin}: unsupported encoding (format={audio_format}, bits={bits}); "
            "expected 16-bit PCM or 32-bit float"
        )
    if channels == 2:
        if samples.size % 2:
            samples = samples[:-1]
        samples = samples.reshape(-1, 2).mean(axis=1)
    if samples.size == 0:
        raise AudioIOError(f"{origin}: zero-length data chunk")
    return AudioSignal(samples, rate)


def decode_wav(data: bytes, origin: str = "<bytes>") -> AudioSignal:
    """Parse WAV bytes (e.g. a base64-decoded service reply) to a signal."""
    return _parse_wav(data, origin)


def read_wav(path: str | Path) -> AudioSignal:
    """Read a WAV file as a mono signal with amplitudes in [-1, 1]."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise AudioIOError(f"cannot read {path}: {exc}") from exc
    return _parse_wav(data, str(path))


def encode_wav(signal: AudioSignal) -> bytes:
    """Encode a signal as 16-bit PCM mono WAV bytes, clipping to [-1, 1]."""
    if len(signal) == 0:
        raise AudioIOError("refusing to write an empty signal")
    scaled = np.round(signal.samples * _PCM_SCALE)
    n_clipped = int(np.count_nonzero((scaled < -32768) | (scaled > 32767)))
    if n_clipped:
        warnings.warn(
            f"{n_clipped} samples outside [-1, 1] were clipped", ClipWarning, stacklevel=3
        )
    pcm = np.clip(scaled, -32768, 32767).astype("<i2").tobytes()
    out = io.BytesIO()
    out.write(b"RIFF")
    out.write(struct.pack("<I", 36 + len(pcm)))
    out.write(b"WAVE")
    out.write(b"fmt ")
    out.write(struct.pack("<IHHIIHH", 16, 1, 1, signal.sample_rate_hz,
                          signal.sample_rate_hz * 2, 2, 16))
    out.write(b"data")
    out.write(struct.pack("<I", len(pcm)))
    out.write(pcm)
    return out.getvalue()


def write_wav(signal: AudioSignal, path: str | Path) -> None:
    """Write a 16-bit PCM mono WAV file."""
    data = encode_wav(signal)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise AudioIOError(f"cannot write {path}: {exc}") from exc


def resample(signal: AudioSignal, target_rate_hz: int) -> AudioSignal:
    """Polyphase resampling with a Kaiser-windowed sinc filter.

    Pure passthrough when the rates already match. Output length is
    round(len * target/source) within one sample.
    """
    target_rate_hz = int(target_rate_hz)
    if target_rate_hz <= 0:
        raise DspError(f"target rate must be positive, got {target_rate_hz}")
    if target_rate_hz == signal.sample_rate_hz:
        return signal
    if len(signal) == 0:
        raise DspError("cannot resample an empty signal")
    g = np.gcd(signal.sample_rate_hz, target_rate_hz)
    up = target_rate_hz // g
    down = signal.sample_rate_hz // g
    max_rate = max(up, down)
    half_len = 10 * max_rate
    taps = firwin(2 * half_len + 1, 1.0 / max_rate, window=("kaiser", _KAISER_BETA))
    out = resample_poly(signal.samples, up, down, window=taps)
    return AudioSignal(out, target_rate_hz)
