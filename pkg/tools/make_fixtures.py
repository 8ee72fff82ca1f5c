"""Generate the frozen STOI fixtures under tests/fixtures/.

Synthesizes speech-shaped utterances and a babble bed at 10 kHz, mixes each
utterance with babble at several SNRs using inline gain math, writes the
pairs as 16-bit WAV, then scores every written pair with the naive oracle in
stoi_reference.py and freezes the numbers into oracle.json.

Run once from the repository root:  python3 tools/make_fixtures.py
Regenerating rewrites the WAVs and oracle values together, so committed
fixtures always agree with the oracle that produced them.
"""

from __future__ import annotations

import json
import wave
from pathlib import Path

import numpy as np

import stoi_reference

FS = 10000
FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def synth_voice(rng: np.random.Generator, dur_s: float) -> np.ndarray:
    """One speech-shaped stream: pitched pulse train, formant-ish resonances,
    syllabic amplitude modulation with occasional pauses."""
    n = int(dur_s * FS)
    t = np.arange(n) / FS

    f0 = rng.uniform(95.0, 220.0)
    vibrato = 1.0 + 0.04 * np.sin(2 * np.pi * rng.uniform(2.0, 5.0) * t + rng.uniform(0, 6.28))
    phase = np.cumsum(f0 * vibrato) / FS
    voiced = np.zeros(n)
    for k in range(1, 40):
        if k * f0 > 4600:
            break
        voiced += np.sin(2 * np.pi * k * phase + rng.uniform(0, 6.28)) / k

    # crude formant shaping in the frequency domain
    spec = np.fft.rfft(voiced)
    freqs = np.fft.rfftfreq(n, 1.0 / FS)
    shape = np.zeros_like(freqs)
    for cf, bw, g in ((rng.uniform(300, 800), 120.0, 1.0),
                      (rng.uniform(900, 1800), 180.0, 0.7),
                      (rng.uniform(2000, 3200), 260.0, 0.45)):
        shape += g * np.exp(-0.5 * ((freqs - cf) / bw) ** 2)
    shape += 0.02
    voiced = np.fft.irfft(spec * shape, n=n)

    hiss = rng.normal(0.0, 1.0, n)
    hiss = np.convolve(hiss, np.array([1.0, -0.92]), mode="same") * 0.15

    syllable = 0.5 * (1.0 + np.sin(2 * np.pi * rng.uniform(2.5, 4.5) * t + rng.uniform(0, 6.28)))
    syllable = syllable ** 1.5
    pauses = np.ones(n)
    for _ in range(int(dur_s)):
        p0 = rng.integers(0, max(1, n - FS // 4))
        pauses[p0:p0 + rng.integers(FS // 20, FS // 6)] *= 0.05
    env = syllable * pauses

    out = (voiced + hiss) * env
    return out / (np.max(np.abs(out)) + 1e-12)


def synth_babble(rng: np.random.Generator, dur_s: float, n_talkers: int = 12) -> np.ndarray:
    acc = np.zeros(int(dur_s * FS))
    for _ in range(n_talkers):
        acc += synth_voice(rng, dur_s)
    return acc / (np.max(np.abs(acc)) + 1e-12)


def write_wav16(path: Path, x: np.ndarray) -> None:
    pcm = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(FS)
        fh.writeframes(pcm.tobytes())


def read_wav16(path: Path) -> np.ndarray:
    with wave.open(str(path), "rb") as fh:
        raw = fh.readframes(fh.getnframes())
    return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240611)

    utterances = [synth_voice(rng, 2.6) * 0.7 for _ in range(4)]
    babble = synth_babble(rng, 8.0) * 0.5
    write_wav16(FIXTURE_DIR / "babble.wav", babble)

    snrs = [-10.0, -5.0, 0.0, 5.0]
    entries = []
    k = 0
    for i, clean in enumerate(utterances):
        for j, snr in enumerate(snrs):
            offset = (i * 17001 + j * 5003) % (len(babble) - len(clean))
            seg = babble[offset:offset + len(clean)]
            gain = np.sqrt(np.mean(clean ** 2) / (np.mean(seg ** 2) * 10.0 ** (snr / 10.0)))
            mixed = clean + gain * seg
            scale = 0.95 / max(np.max(np.abs(clean)), np.max(np.abs(mixed)))
            clean_name = f"pair{k:02d}_clean.wav"
            mixed_name = f"pair{k:02d}_mixed.wav"
            write_wav16(FIXTURE_DIR / clean_name, clean * scale)
            write_wav16(FIXTURE_DIR / mixed_name, mixed * scale)

            c = read_wav16(FIXTURE_DIR / clean_name)
            m = read_wav16(FIXTURE_DIR / mixed_name)
            score = stoi_reference.stoi(c, m, FS)
            entries.append({
                "clean": clean_name,
                "degraded": mixed_name,
                "mix_snr_db": snr,
                "stoi": score,
            })
            print(f"{clean_name} vs {mixed_name}  snr={snr:+.0f} dB  stoi={score:.6f}")
            k += 1

    oracle = {"sample_rate_hz": FS, "pairs": entries}
    (FIXTURE_DIR / "oracle.json").write_text(json.dumps(oracle, indent=2, sort_keys=True))
    print(f"wrote {len(entries)} pairs to {FIXTURE_DIR}")


if __name__ == "__main__":
    main()
