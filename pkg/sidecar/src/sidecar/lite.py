"""Self-contained scoring backend: no model downloads, no weights on disk.

Synthesis builds speech-shaped audio from letter classes, similarity is a
character-trigram F1, and perplexity comes from an add-alpha bigram model
over the built-in corpus below. Quality is far below the neural backend;
the point is a deterministic stand-in with the same interfaces and the
same orderings (self-similarity near 1, scrambled text scoring worse).
"""

from __future__ import annotations

import hashlib
import math
import re
from collections import Counter

import numpy as np

from .audio import encode_wav

# small corpus of plain declarative English; the bigram model is trained
# on this at import time
CORPUS = (
    "the cat sat on the mat near the door",
    "the dog ran across the yard in the rain",
    "a small bird sang in the old tree",
    "the old man read his paper by the fire",
    "she walked to the market in the morning",
    "he put the keys on the kitchen table",
    "the children walked slowly to the school",
    "a young girl drew a horse on the wall",
    "the quick brown fox jumps over the lazy dog",
    "heavy rain fell on the roof all night",
    "warm bread and sweet jam made a good meal",
    "she poured fresh milk into the blue cup",
    "two boats sailed past the light house",
    "the river ran past the old mill",
    "the sun rose over the green hills",
    "a warm wind blew through the open window",
    "the farmer fed the horses in the barn",
    "my friend lives near the river bank",
    "the baker made fresh bread every morning",
    "the boy threw the ball over the fence",
    "a long road led to the small town",
    "the teacher wrote the lesson on the board",
    "the old clock on the wall stopped at noon",
    "she set the warm plates on the table",
    "the train left the station before the storm",
    "dark clouds moved slowly over the sea",
    "the little shop on the corner sold sweet tea",
    "he carried the heavy box up the stairs",
    "the lamp in the window burned all night",
    "fresh snow covered the quiet street",
    "the young man sold fish at the market",
    "a gray cat slept under the wooden chair",
    "the garden behind the house was full of flowers",
    "she read a long letter from her old friend",
    "the bell in the tower rang at noon",
    "green leaves fell into the cold water",
    "the small boat rocked gently on the waves",
    "he drank a cup of black coffee at dawn",
    "the tall trees gave shade in the hot summer",
    "a white horse stood alone in the field",
    "the fire burned low in the stone hearth",
    "she hung the wet clothes on the line",
    "the road through the woods was dark and quiet",
    "a cold wind came down from the hills",
    "the old bridge crossed the narrow river",
    "he cut the bread with a long knife",
    "the moon rose slowly over the still lake",
    "children played in the park near the school",
    "the kettle on the stove began to sing",
    "a light rain fell on the garden all day",
    "the sheep grazed on the green hill side",
    "she found the lost ring under the bed",
    "the wagon rolled slowly down the dusty road",
    "warm light came through the kitchen window",
    "the fisherman pulled the net from the cold sea",
    "a small lamp lit the corner of the room",
    "the letter lay unopened on the hall table",
    "he planted young trees along the garden wall",
    "the storm broke over the bay before dark",
    "she sang a quiet song to the sleeping child",
    "the miller ground the corn at the old mill",
    "fresh fruit filled the bowl on the table",
    "the horse pulled the cart up the long hill",
    "a thin mist hung over the river at dawn",
    "the old woman told stories by the fire",
    "bright stars filled the clear night sky",
    "the postman left the parcel at the front door",
    "snow fell softly on the roofs of the town",
    "the cook stirred the soup in the big pot",
    "a brown hen pecked at the seeds in the yard",
    "the last train reached the town at midnight",
    "soft music played in the room next door",
)

_WORD_RE = re.compile(r"[a-z']+")

_VOWELS = set("aeiou")

# rough first and second formant centers per vowel letter, in Hz
_FORMANTS = {
    "a": (750.0, 1200.0),
    "e": (550.0, 1800.0),
    "i": (320.0, 2300.0),
    "o": (500.0, 900.0),
    "u": (350.0, 800.0),
}


def _tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


# ------------------------------------------------------------------ TTS

class LiteTts:
    """Letter-class synthesizer: vowels become voiced formant segments,
    consonants become filtered noise bursts, spaces become short gaps."""

    model_name = "builtin-formant"
    rate_hz = 22050

    def synthesize(self, text: str) -> tuple[bytes, int]:
        if not text.strip():
            raise ValueError("empty text")
        rate = self.rate_hz
        seed = int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")
        rng = np.random.default_rng(seed)
        f0 = rng.uniform(105.0, 185.0)
        pieces = []
        for ch in text.lower():
            if ch in _VOWELS:
                pieces.append(self._voiced(ch, f0, rate, rng))
            elif ch.isalpha():
                pieces.append(self._burst(ch, rate, rng))
            elif ch.isspace():
                pieces.append(np.zeros(int(0.04 * rate)))
        if not pieces:
            raise ValueError(f"nothing to say in {text!r}")
        sig = np.concatenate(pieces)
        sig = sig / (np.max(np.abs(sig)) + 1e-12) * 0.65
        return encode_wav(sig, rate), rate

    def _voiced(self, vowel: str, f0: float, rate: int, rng) -> np.ndarray:
        n = int(0.11 * rate)
        t = np.arange(n) / rate
        # pulse-train excitation as a sum of harmonics, shaped in the
        # frequency domain by two formant resonances
        sig = np.zeros(n)
        for k in range(1, int(4000 / f0)):
            sig += np.sin(2 * np.pi * k * f0 * t) / k
        spectrum = np.fft.rfft(sig)
        freqs = np.fft.rfftfreq(n, 1.0 / rate)
        f1, f2 = _FORMANTS[vowel]
        gain = (np.exp(-0.5 * ((freqs - f1) / 120.0) ** 2)
                + 0.7 * np.exp(-0.5 * ((freqs - f2) / 180.0) ** 2)
                + 0.02)
        shaped = np.fft.irfft(spectrum * gain, n)
        fade = min(n // 8, 256)
        ramp = np.linspace(0.0, 1.0, fade)
        shaped[:fade] *= ramp
        shaped[-fade:] *= ramp[::-1]
        return shaped

    def _burst(self, letter: str, rate: int, rng) -> np.ndarray:
        n = int(0.05 * rate)
        noise = rng.normal(0.0, 1.0, n)
        # letter index picks a stable band so each consonant sounds distinct
        idx = ord(letter) - ord("a")
        center = 900.0 + 250.0 * (idx % 12)
        spectrum = np.fft.rfft(noise)
        freqs = np.fft.rfftfreq(n, 1.0 / rate)
        gain = np.exp(-0.5 * ((freqs - center) / 400.0) ** 2) + 0.01
        shaped = np.fft.irfft(spectrum * gain, n)
        env = np.exp(-np.arange(n) / (0.012 * rate))
        return 0.6 * shaped * env


# ------------------------------------------------------------------ STS

class LiteSts:
    """Character-trigram F1 between two texts."""

    model_name = "builtin-trigram"

    def _grams(self, text: str) -> Counter:
        folded = " ".join(_tokens(text))
        padded = f"  {folded}  "
        return Counter(padded[i:i + 3] for i in range(len(padded) - 2))

    def score(self, candidate: str, reference: str) -> float:
        if not candidate.strip() or not reference.strip():
            raise ValueError("empty text")
        a, b = self._grams(candidate), self._grams(reference)
        if not a or not b:
            return 1.0 if a == b else 0.0
        overlap = sum((a & b).values())
        precision = overlap / sum(a.values())
        recall = overlap / sum(b.values())
        if precision + recall == 0.0:
            return 0.0
        return 2.0 * precision * recall / (precision + recall)


# ------------------------------------------------------------------ PPL

_START = "<s>"
_UNK = "<unk>"


class LitePpl:
    """Add-alpha smoothed word-bigram perplexity over the built-in corpus."""

    model_name = "builtin-bigram"

    def __init__(self, alpha: float = 0.02):
        self._alpha = alpha
        self._bigrams: Counter = Counter()
        self._context: Counter = Counter()
        vocab = {_START, _UNK}
        for sentence in CORPUS:
            words = _tokens(sentence)
            vocab.update(words)
            prev = _START
            for word in words:
                self._bigrams[(prev, word)] += 1
                self._context[prev] += 1
                prev = word
        self._vocab_size = len(vocab)
        self._vocab = vocab

    def score(self, text: str) -> float:
        words = _tokens(text)
        if not words:
            raise ValueError("empty text")
        alpha, v = self._alpha, self._vocab_size
        log_sum = 0.0
        prev = _START
        for word in words:
            if word not in self._vocab:
                word = _UNK
            num = self._bigrams[(prev, word)] + alpha
            den = self._context[prev] + alpha * v
            log_sum += math.log(num / den)
            prev = word
        return math.exp(-log_sum / len(words))


class LiteBackend:
    """The three capabilities bundled, mirroring the neural backend shape."""

    name = "lite"

    def __init__(self):
        self.tts = LiteTts()
        self.sts = LiteSts()
        self.ppl = LitePpl()
