"""Float waveform to WAV bytes and back, plus the base64 wrapping the
JSON replies use."""

import base64
import io
import wave

import numpy as np


def encode_wav(samples: np.ndarray, rate_hz: int) -> bytes:
    """Mono 16-bit PCM WAV bytes; amplitudes clipped to [-1, 1]."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = np.round(clipped * 32767.0).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(rate_hz)
        wav.writeframes(pcm.tobytes())
    return buf.getvalue()


def decode_wav(data: bytes) -> tuple[np.ndarray, int]:
    with wave.open(io.BytesIO(data), "rb") as wav:
        rate = wav.getframerate()
        n = wav.getnframes()
        raw = wav.readframes(n)
        width = wav.getsampwidth()
        channels = wav.getnchannels()
    if width != 2:
        raise ValueError(f"expected 16-bit samples, got width {width}")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32767.0
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    return samples, rate


def to_b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def from_b64(text: str) -> bytes:
    return base64.b64decode(text.encode("ascii"))
