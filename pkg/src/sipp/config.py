"""Run configuration: a small key=value file format with ${ENV}
interpolation, typed accessors, and the provider factory.

Secrets never enter the file; the config names the environment variable
holding the API key and the manifest records only that name.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import DataError
from .generation import (
    CachingTtsClient,
    GenerationConfig,
    HttpLlmClient,
    HttpPplClient,
    HttpStsClient,
    HttpTtsClient,
    Providers,
    ScorerEndpoints,
    mock_providers,
)
from .pipeline import PipelineConfig

_ENV_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")

_BOOL_WORDS = {"true": True, "yes": True, "1": True,
               "false": False, "no": False, "0": False}

_KNOWN_KEYS = {
    "provider", "seed", "jobs",
    "n_candidates", "target_snr_db", "noise_label", "template_id",
    "allow_input_fallback",
    "temperature", "top_p", "max_retries", "model_name",
    "llm_url", "tts_url", "sts_url", "ppl_url", "api_key_env",
    "cache_dir", "noise_wav", "voice",
    "min_words", "max_words",
}


def interpolate_env(value: str) -> str:
    def sub(match):
        name = match.group(1)
        if name not in os.environ:
            raise DataError(f"config references unset environment variable {name}")
        return os.environ[name]
    return _ENV_RE.sub(sub, value)


def parse_config(text: str) -> dict[str, str]:
    """key = value lines; # starts a comment line; ${VAR} pulls from the
    environment at parse time."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise DataError(f"config line {lineno}: unknown key {key!r}")
        out[key] = interpolate_env(value.strip())
    return out


def load_config(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _get_int(raw: dict, key: str, default: int) -> int:
    if key not in raw:
        return default
    try:
        return int(raw[key])
    except ValueError:
        raise DataError(f"config {key}: not an integer: {raw[key]!r}") from None


def _get_float(raw: dict, key: str, default: float) -> float:
    if key not in raw:
        return default
    try:
        return float(raw[key])
    except ValueError:
        raise DataError(f"config {key}: not a number: {raw[key]!r}") from None


def _get_bool(raw: dict, key: str, default: bool) -> bool:
    if key not in raw:
        return default
    word = raw[key].lower()
    if word not in _BOOL_WORDS:
        raise DataError(f"config {key}: not a boolean: {raw[key]!r}")
    return _BOOL_WORDS[word]


@dataclass(frozen=True)
class RunSettings:
    """Everything a run needs, resolved from file plus flag overrides."""

    provider: str = "mock"
    seed: int = 0
    jobs: int = 0  # 0 means pick a default at run time
    noise_wav: str = ""
    cache_dir: str = ""
    voice: str = "default"
    min_words: int = 10
    max_words: int = 12
    api_key_env: str = "SIPP_API_KEY"
    endpoints: dict = field(default_factory=dict)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    generation: GenerationConfig = field(default_factory=GenerationConfig)

    def __post_init__(self):
        if self.provider not in ("mock", "http"):
            raise DataError(f"provider must be mock or http, got {self.provider!r}")
        if self.min_words > self.max_words:
            raise DataError(
                f"min_words {self.min_words} exceeds max_words {self.max_words}")

    def resolved_jobs(self) -> int:
        if self.jobs > 0:
            return self.jobs
        return max(1, min(os.cpu_count() or 1, 4))


def settings_from_mapping(raw: dict[str, str], *, provider: str | None = None,
                          seed: int | None = None, jobs: int | None = None) -> RunSettings:
    """Build settings from parsed config; keyword overrides win over the file."""
    pipeline = PipelineConfig(
        n_candidates=_get_int(raw, "n_candidates", 6),
        target_snr_db=_get_float(raw, "target_snr_db", -5.0),
        noise_label=raw.get("noise_label", "babble"),
        template_id=raw.get("template_id", "pas_n"),
        allow_input_fallback=_get_bool(raw, "allow_input_fallback", False),
    )
    generation = GenerationConfig(
        n_candidates=pipeline.n_candidates,
        temperature=_get_float(raw, "temperature", 1.0),
        top_p=_get_float(raw, "top_p", 1.0),
        max_retries=_get_int(raw, "max_retries", 3),
        model_name=raw.get("model_name", "gpt-3.5-turbo"),
    )
    endpoints = {
        key: raw[key] for key in ("llm_url", "tts_url", "sts_url", "ppl_url")
        if key in raw
    }
    return RunSettings(
        provider=provider if provider is not None else raw.get("provider", "mock"),
        seed=seed if seed is not None else _get_int(raw, "seed", 0),
        jobs=jobs if jobs is not None else _get_int(raw, "jobs", 0),
        noise_wav=raw.get("noise_wav", ""),
        cache_dir=raw.get("cache_dir", ""),
        voice=raw.get("voice", "default"),
        min_words=_get_int(raw, "min_words", 10),
        max_words=_get_int(raw, "max_words", 12),
        api_key_env=raw.get("api_key_env", "SIPP_API_KEY"),
        endpoints=endpoints,
        pipeline=pipeline,
        generation=generation,
    )


def build_providers(settings: RunSettings) -> Providers:
    if settings.provider == "mock":
        cache = settings.cache_dir or None
        return mock_providers(cache_dir=cache, generation=settings.generation)
    endpoints = ScorerEndpoints(
        llm_url=settings.endpoints.get("llm_url", ""),
        tts_url=settings.endpoints.get("tts_url", ""),
        sts_url=settings.endpoints.get("sts_url", ""),
        ppl_url=settings.endpoints.get("ppl_url", ""),
        api_key_env_name=settings.api_key_env,
    )
    llm = HttpLlmClient(endpoints)
    tts = HttpTtsClient(endpoints)
    if settings.cache_dir:
        tts = CachingTtsClient(tts, settings.cache_dir,
                               endpoint_tag=endpoints.tts_url,
                               voice=settings.voice)
    return Providers(
        llm=llm,
        tts=tts,
        sts=HttpStsClient(endpoints),
        ppl=HttpPplClient(endpoints),
        generation=settings.generation,
    )


def manifest_dict(settings: RunSettings, out_dir: str, config_path: str | None,
                  dataset_sha256: str | None = None) -> dict:
    """Everything needed to reproduce the run; no secret values."""
    return {
        "version": __version__,
        "config_file": config_path or "",
        "output_dir": out_dir,
        "provider": settings.provider,
        "seed": settings.seed,
        "noise_wav": settings.noise_wav,
        "voice": settings.voice,
        "min_words": settings.min_words,
        "max_words": settings.max_words,
        "api_key_env": settings.api_key_env,
        "endpoints": dict(sorted(settings.endpoints.items())),
        "dataset_sha256": dataset_sha256 or "",
        "pipeline": {
            "n_candidates": settings.pipeline.n_candidates,
            "target_snr_db": settings.pipeline.target_snr_db,
            "noise_label": settings.pipeline.noise_label,
            "template_id": settings.pipeline.template_id,
            "allow_input_fallback": settings.pipeline.allow_input_fallback,
        },
        "generation": {
            "temperature": settings.generation.temperature,
            "top_p": settings.generation.top_p,
            "max_retries": settings.generation.max_retries,
            "model_name": settings.generation.model_name,
        },
    }


def write_manifest(path: str | Path, manifest: dict) -> None:
    Path(path).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
