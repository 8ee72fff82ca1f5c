"""Prompt templates, LLM output parsing, and the four external capabilities
(LLM chat, TTS, semantic similarity, perplexity).

Every capability comes in exactly two flavors: an HTTP client and a
deterministic mock, so the whole pipeline runs with or without a network.
Mocks derive everything from sha256 of their input, never from Python's
salted hash().
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urlparse

import numpy as np
import requests

from .audio import AudioSignal, decode_wav, encode_wav, read_wav
from .errors import DataError, ParseShortfallError, ServiceError
from .text_metrics import ph_len

# ------------------------------------------------------------- templates

@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str


_ICL_SAMPLES = [
    ("I don't know if you are familiar with that.",
     "I have no idea if you're familiar with that."),
    ("what other long-range goals do you have besides college?",
     "Apart from college, what are your other long-term objectives?"),
    ("I don't have access either. Although, I did at one time",
     "In the past, I had access, but currently, I don't."),
    ("Right now I've got it narrowed down to the top four teams.",
     "At this point, I've trimmed my options and picked 4 top teams."),
    ("prohibition didn't stop it and didn't do anything really.",
     "It continued despite the prohibition, which didn't accomplish anything."),
]

_ICL_BODY = (
    "Look at the samples of a sentence and its intelligible paraphrase:\n"
    + "\n".join(f"{i}. {src} => {par}" for i, (src, par) in enumerate(_ICL_SAMPLES, 1))
    + "\nSimilarly, generate an intelligible paraphrase for the input sentence: "
    "{input text}"
)

TEMPLATES: dict[str, PromptTemplate] = {
    "zsl_low": PromptTemplate(
        "zsl_low",
        "Generate an intelligible paraphrase for the following input sentence: "
        "{input text}",
    ),
    "zsl_med": PromptTemplate(
        "zsl_med",
        "Generate a simple, intelligible, and spoken-styled paraphrase with "
        "10-12 words for the following input sentence: {input text}",
    ),
    "zsl_high": PromptTemplate(
        "zsl_high",
        "For a noisy listening environment with babble noise at SNR -5, generate "
        "a simple, intelligible, and spoken-styled paraphrase with 10-12 words, "
        "for the following input sentence: {input text}",
    ),
    "pas_n": PromptTemplate(
        "pas_n",
        "Generate {n} simple, intelligible, and spoken-styled paraphrases with "
        "10-12 words for the given input sentence: {input text}",
    ),
    "icl": PromptTemplate("icl", _ICL_BODY),
}


def render_prompt(template: PromptTemplate, input_text: str, n: int = 1) -> str:
    if not input_text:
        raise DataError("cannot render a prompt for empty input text")
    if "{input text}" not in template.body:
        raise DataError(f"template {template.id} is missing the input slot")
    body = template.body
    if template.id == "pas_n":
        if "{n}" not in body:
            raise DataError("pas_n template is missing the {n} slot")
        body = body.replace("{n}", str(n))
    return body.replace("{input text}", input_text)


_ENUM_RE = re.compile(r"^\s*\d+[.)]\s*")
_BULLET_RE = re.compile(r"^\s*[-*]\s*")
_QUOTES = "\"'“”‘’"


def parse_candidates(llm_text: str, expected_n: int) -> list[str]:
    """Pull up to expected_n candidate lines out of an LLM reply."""
    out = []
    for line in llm_text.splitlines():
        line = _ENUM_RE.sub("", line)
        line = _BULLET_RE.sub("", line).strip()
        line = line.strip(_QUOTES).strip()
        if line:
            out.append(line)
        if len(out) == expected_n:
            break
    if len(out) < expected_n:
        raise ParseShortfallError(
            f"parsed {len(out)} candidates, expected {expected_n}"
        )
    return out


# ------------------------------------------------------------- config types

@dataclass(frozen=True)
class GenerationConfig:
    n_candidates: int = 6
    temperature: float = 1.0
    top_p: float = 1.0
    max_retries: int = 3
    model_name: str = "gpt-3.5-turbo"

    def __post_init__(self):
        if self.n_candidates < 1:
            raise DataError("need at least one candidate")
        if self.max_retries < 0:
            raise DataError("max_retries must be nonnegative")


def _check_url(url: str, what: str) -> None:
    if not url:
        return
    parts = urlparse(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise DataError(f"malformed {what} URL: {url!r}")


@dataclass(frozen=True)
class ScorerEndpoints:
    llm_url: str = ""
    tts_url: str = ""
    sts_url: str = ""
    ppl_url: str = ""
    api_key_env_name: str = "SIPP_API_KEY"

    def __post_init__(self):
        for what in ("llm", "tts", "sts", "ppl"):
            _check_url(getattr(self, f"{what}_url"), what)


# ------------------------------------------------------------- transport

_RETRY_BASE_DELAY_S = 0.5
_DEFAULT_IN_FLIGHT = 4
_TIMEOUT_S = 60.0

_slots: dict[str, threading.BoundedSemaphore] = {}
_slots_lock = threading.Lock()


def _endpoint_slot(url: str, limit: int) -> threading.BoundedSemaphore:
    # the first caller for an endpoint fixes its limit
    with _slots_lock:
        if url not in _slots:
            _slots[url] = threading.BoundedSemaphore(limit)
        return _slots[url]


class _Transient(Exception):
    pass


def _post_json(url: str, payload: dict, headers: dict | None, max_retries: int,
               in_flight: int, base_delay_s: float = _RETRY_BASE_DELAY_S) -> dict:
    """POST with bounded in-flight requests and exponential backoff on
    transport failures, 429, and 5xx."""
    slot = _endpoint_slot(url, in_flight)
    attempt = 0
    while True:
        try:
            with slot:
                try:
                    resp = requests.post(url, json=payload, headers=headers,
                                         timeout=_TIMEOUT_S)
                except (requests.ConnectionError, requests.Timeout) as exc:
                    raise _Transient(str(exc)) from exc
            if resp.status_code == 429 or resp.status_code >= 500:
                raise _Transient(f"HTTP {resp.status_code}")
            if resp.status_code in (401, 403):
                raise ServiceError(f"{url}: authentication failure ({resp.status_code})")
            if resp.status_code != 200:
                raise ServiceError(f"{url}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise ServiceError(f"{url}: non-JSON reply") from exc
        except _Transient as exc:
            if attempt >= max_retries:
                raise ServiceError(f"{url}: {exc} after {attempt + 1} attempts") from exc
            time.sleep(base_delay_s * (2 ** attempt))
            attempt += 1


# ------------------------------------------------------------- LLM clients

class HttpLlmClient:
    """OpenAI-compatible chat-completions endpoint."""

    def __init__(self, endpoints: ScorerEndpoints, in_flight: int = _DEFAULT_IN_FLIGHT,
                 retry_delay_s: float = _RETRY_BASE_DELAY_S):
        if not endpoints.llm_url:
            raise DataError("no LLM endpoint configured")
        self._url = endpoints.llm_url
        self._key_env = endpoints.api_key_env_name
        self._in_flight = in_flight
        self._retry_delay_s = retry_delay_s

    def generate(self, prompt: str, config: GenerationConfig) -> str:
        key = os.environ.get(self._key_env, "")
        if not key:
            raise DataError(f"API key env var {self._key_env} is not set")
        payload = {
            "model": config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": config.temperature,
            "top_p": config.top_p,
        }
        data = _post_json(self._url, payload, {"Authorization": f"Bearer {key}"},
                          config.max_retries, self._in_flight, self._retry_delay_s)
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ServiceError(f"malformed chat completion: {json.dumps(data)[:200]}") from exc
        if not text or not text.strip():
            raise ServiceError("empty completion")
        return text


class MockLlmClient:
    """Canned or computed replies; the default echoes the input sentence
    back n times as a numbered list."""

    def __init__(self, canned: dict[str, str] | None = None, reply_fn=None):
        self._canned = canned or {}
        self._reply_fn = reply_fn

    @staticmethod
    def extract_input(prompt: str) -> str:
        return prompt.rsplit("input sentence: ", 1)[-1].strip()

    def generate(self, prompt: str, config: GenerationConfig) -> str:
        if prompt in self._canned:
            return self._canned[prompt]
        if self._reply_fn is not None:
            return self._reply_fn(prompt, config)
        text = self.extract_input(prompt)
        return "\n".join(f"{i}. {text}" for i in range(1, config.n_candidates + 1))


# ------------------------------------------------------------- TTS clients

class HttpTtsClient:
    def __init__(self, endpoints: ScorerEndpoints, in_flight: int = _DEFAULT_IN_FLIGHT,
                 max_retries: int = 3, retry_delay_s: float = _RETRY_BASE_DELAY_S):
        if not endpoints.tts_url:
            raise DataError("no TTS endpoint configured")
        self._url = endpoints.tts_url
        self._in_flight = in_flight
        self._max_retries = max_retries
        self._retry_delay_s = retry_delay_s

    def synthesize(self, text: str) -> AudioSignal:
        if not text:
            raise DataError("cannot synthesize empty text")
        data = _post_json(self._url, {"text": text}, None, self._max_retries,
                          self._in_flight, self._retry_delay_s)
        try:
            wav = base64.b64decode(data["audio_wav_b64"])
            rate = int(data["sample_rate_hz"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(f"{self._url}: malformed TTS reply") from exc
        try:
            sig = decode_wav(wav, self._url)
        except Exception as exc:
            raise ServiceError(f"{self._url}: undecodable TTS audio: {exc}") from exc
        if sig.sample_rate_hz != rate:
            raise ServiceError(
                f"{self._url}: reply claims {rate} Hz but WAV says {sig.sample_rate_hz}"
            )
        return sig


class MockTtsClient:
    """Speech-shaped waveform seeded by the text: pitch and envelope come
    from sha256(text), duration is 0.06 s per phoneme, rate 22050 Hz."""

    rate_hz = 22050

    def synthesize(self, text: str) -> AudioSignal:
        if not text:
            raise DataError("cannot synthesize empty text")
        n_ph = ph_len(text)
        n = max(1, int(round(0.06 * n_ph * self.rate_hz)))
        seed = int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")
        rng = np.random.default_rng(seed)
        t = np.arange(n) / self.rate_hz
        f0 = rng.uniform(100.0, 200.0)
        sig = np.zeros(n)
        for k in range(1, 24):
            if k * f0 > 8000:
                break
            sig += np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 6.28)) / (k ** 0.8)
        sig += 0.2 * rng.normal(0.0, 1.0, n)
        env = 0.55 + 0.45 * np.sin(2 * np.pi * rng.uniform(2.0, 4.0) * t
                                   + rng.uniform(0, 6.28))
        sig *= env
        peak = np.max(np.abs(sig))
        return AudioSignal(0.6 * sig / peak if peak > 0 else sig, self.rate_hz)


class CachingTtsClient:
    """Content-addressed WAV cache around any TTS client.

    The cache key hashes (text, endpoint tag, voice); files are written
    temp-then-rename so concurrent writers are safe, and playback always
    comes from the cached file so hit and miss return identical samples.
    """

    def __init__(self, inner, cache_dir: str | Path, endpoint_tag: str = "",
                 voice: str = "default"):
        self._inner = inner
        self._dir = Path(cache_dir)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._tag = endpoint_tag
        self._voice = voice

    def cache_path(self, text: str) -> Path:
        key = hashlib.sha256(
            f"{text}|{self._tag}|{self._voice}".encode()
        ).hexdigest()
        return self._dir / f"{key}.wav"

    def synthesize(self, text: str) -> AudioSignal:
        path = self.cache_path(text)
        if not path.exists():
            sig = self._inner.synthesize(text)
            tmp = path.with_suffix(f".tmp{os.getpid()}")
            tmp.write_bytes(encode_wav(sig))
            os.replace(tmp, path)
        return read_wav(path)


# ------------------------------------------------------------- STS clients

class HttpStsClient:
    def __init__(self, endpoints: ScorerEndpoints, in_flight: int = _DEFAULT_IN_FLIGHT,
                 max_retries: int = 3, retry_delay_s: float = _RETRY_BASE_DELAY_S):
        if not endpoints.sts_url:
            raise DataError("no STS endpoint configured")
        self._url = endpoints.sts_url
        self._in_flight = in_flight
        self._max_retries = max_retries
        self._retry_delay_s = retry_delay_s

    def score(self, candidate: str, reference: str) -> float:
        if not candidate or not reference:
            raise DataError("STS needs two non-empty texts")
        data = _post_json(self._url, {"candidate": candidate, "reference": reference},
                          None, self._max_retries, self._in_flight, self._retry_delay_s)
        try:
            f1 = float(data["f1"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(f"{self._url}: malformed STS reply") from exc
        if not 0.0 <= f1 <= 1.0 or f1 != f1:
            raise ServiceError(f"{self._url}: similarity {f1} outside [0, 1]")
        return f1


_TOKEN_RE = re.compile(r"[a-z0-9']+")


class MockStsClient:
    """Token-overlap F1 over lowercased word sets."""

    def score(self, candidate: str, reference: str) -> float:
        if not candidate or not reference:
            raise DataError("STS needs two non-empty texts")
        a = set(_TOKEN_RE.findall(candidate.lower()))
        b = set(_TOKEN_RE.findall(reference.lower()))
        if not a or not b:
            return 0.0
        precision = len(a & b) / len(a)
        recall = len(a & b) / len(b)
        if precision + recall == 0.0:
            return 0.0
        return 2.0 * precision * recall / (precision + recall)


# ------------------------------------------------------------- PPL clients

class HttpPplClient:
    def __init__(self, endpoints: ScorerEndpoints, in_flight: int = _DEFAULT_IN_FLIGHT,
                 max_retries: int = 3, retry_delay_s: float = _RETRY_BASE_DELAY_S):
        if not endpoints.ppl_url:
            raise DataError("no PPL endpoint configured")
        self._url = endpoints.ppl_url
        self._in_flight = in_flight
        self._max_retries = max_retries
        self._retry_delay_s = retry_delay_s

    def score(self, text: str) -> float:
        if not text:
            raise DataError("PPL needs non-empty text")
        data = _post_json(self._url, {"text": text}, None, self._max_retries,
                          self._in_flight, self._retry_delay_s)
        try:
            ppl = float(data["ppl"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(f"{self._url}: malformed PPL reply") from exc
        if not ppl > 0.0 or ppl != ppl or ppl == float("inf"):
            raise ServiceError(f"{self._url}: perplexity {ppl} is not a positive real")
        return ppl


class MockPplClient:
    """Hash-seeded positive perplexity, stable across runs."""

    def score(self, text: str) -> float:
        if not text:
            raise DataError("PPL needs non-empty text")
        digest = hashlib.sha256(text.encode()).digest()
        return 50.0 + int.from_bytes(digest[:4], "big") % 200_000 / 1000.0


# ------------------------------------------------------------- bundle

@dataclass
class Providers:
    """The four capabilities the pipeline consumes, mock or HTTP."""

    llm: object
    tts: object
    sts: object
    ppl: object
    generation: GenerationConfig = field(default_factory=GenerationConfig)


def mock_providers(cache_dir: str | Path | None = None,
                   generation: GenerationConfig | None = None) -> Providers:
    tts = MockTtsClient()
    if cache_dir is not None:
        tts = CachingTtsClient(tts, cache_dir, endpoint_tag="mock")
    return Providers(
        llm=MockLlmClient(),
        tts=tts,
        sts=MockStsClient(),
        ppl=MockPplClient(),
        generation=generation or GenerationConfig(),
    )
