"""Prompt-and-select: generate n paraphrase candidates, synthesize each,
mix with noise, score intelligibility, and keep the best.

One noise offset is used for a sentence and all its candidates, so the
comparison between candidates is under identical noise.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, replace

from .audio import resample
from .errors import DataError, DspError, ParseShortfallError, SippError
from .generation import Providers, TEMPLATES, parse_candidates, render_prompt
from .mixing import MixSpec, NoiseSource, mix_at_snr
from .stoi import StoiConfig, stoi
from .text_metrics import PairMetrics, lexical_deviation, ph_len


@contextmanager
def _stage(name: str):
    # keep the exception class (and so the exit code), prefix the stage
    try:
        yield
    except SippError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


@dataclass(frozen=True)
class Candidate:
    text: str
    stoi: float
    pwr_stoi: float


@dataclass(frozen=True)
class CandidateSet:
    input_text: str
    input_audio_stoi: float
    candidates: tuple[Candidate, ...]

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        for c in self.candidates:
            if abs(c.pwr_stoi - c.stoi / self.input_audio_stoi) > 1e-9:
                raise DataError(
                    f"candidate ratio {c.pwr_stoi} inconsistent with "
                    f"{c.stoi}/{self.input_audio_stoi}"
                )

    @classmethod
    def from_scores(cls, input_text: str, input_stoi: float,
                    scored: list[tuple[str, float]]) -> "CandidateSet":
        if input_stoi <= 0.0:
            raise DspError(f"input utterance scored {input_stoi}; ratios undefined")
        return cls(
            input_text,
            input_stoi,
            tuple(Candidate(t, s, s / input_stoi) for t, s in scored),
        )


@dataclass(frozen=True)
class Selection:
    text: str
    stoi: float
    pwr_stoi: float
    selected_index: int


@dataclass(frozen=True)
class PipelineConfig:
    n_candidates: int = 6
    target_snr_db: float = -5.0
    noise_label: str = "babble"
    template_id: str = "pas_n"
    allow_input_fallback: bool = False

    def __post_init__(self):
        if self.n_candidates < 1:
            raise DataError("need at least one candidate")
        if self.template_id not in TEMPLATES:
            raise DataError(
                f"unknown template {self.template_id!r}; know {sorted(TEMPLATES)}"
            )


@dataclass(frozen=True)
class PasResult:
    metrics: PairMetrics
    candidate_set: CandidateSet
    selection: Selection


def score_utterance(text: str, noise: NoiseSource, target_snr_db: float,
                    providers: Providers, noise_offset_samples: int = 0,
                    stoi_config: StoiConfig = StoiConfig()) -> float:
    """Synthesize, bring to the analysis rate, mix at the target SNR, score."""
    with _stage("tts"):
        clean = providers.tts.synthesize(text)
    rate = stoi_config.analysis_rate_hz
    with _stage("resample"):
        clean = resample(clean, rate)
        noise_sig = resample(noise.signal, rate)
    noise = NoiseSource(noise_sig, noise.label)
    with _stage("mix"):
        mixed, _ = mix_at_snr(clean, noise,
                              MixSpec(target_snr_db, noise_offset_samples))
    with _stage("stoi"):
        return stoi(clean, mixed, stoi_config).value


def generate_candidate_set(input_text: str, noise: NoiseSource,
                           config: PipelineConfig, providers: Providers,
                           noise_offset_samples: int = 0) -> CandidateSet:
    """Prompt the LLM for n candidates and score them all plus the input."""
    if not input_text.strip():
        raise DataError("empty input sentence")
    template = TEMPLATES[config.template_id]
    prompt = render_prompt(template, input_text, config.n_candidates)
    gen = replace(providers.generation, n_candidates=config.n_candidates)

    texts = None
    with _stage("llm"):
        for attempt in (0, 1):  # a parse shortfall buys one regeneration
            reply = providers.llm.generate(prompt, gen)
            try:
                texts = parse_candidates(reply, config.n_candidates)
                break
            except ParseShortfallError:
                if attempt == 1:
                    raise
    input_stoi = score_utterance(input_text, noise, config.target_snr_db,
                                 providers, noise_offset_samples)
    scored = [
        (t, score_utterance(t, noise, config.target_snr_db, providers,
                            noise_offset_samples))
        for t in texts
    ]
    return CandidateSet.from_scores(input_text, input_stoi, scored)


def select_best(candidate_set: CandidateSet, config: PipelineConfig) -> Selection:
    """Argmax by intelligibility ratio; ties go to the lowest index."""
    if not candidate_set.candidates:
        raise DataError("cannot select from an empty candidate set")
    best_i = 0
    for i, c in enumerate(candidate_set.candidates):
        if c.pwr_stoi > candidate_set.candidates[best_i].pwr_stoi:
            best_i = i
    best = candidate_set.candidates[best_i]
    if config.allow_input_fallback and best.pwr_stoi < 1.0:
        return Selection(candidate_set.input_text, candidate_set.input_audio_stoi,
                         1.0, -1)
    return Selection(best.text, best.stoi, best.pwr_stoi, best_i)


def run_pas(input_text: str, noise: NoiseSource, config: PipelineConfig,
            providers: Providers, noise_offset_samples: int = 0) -> PasResult:
    """Full prompt-and-select for one sentence, with the metric row."""
    cset = generate_candidate_set(input_text, noise, config, providers,
                                  noise_offset_samples)
    selection = select_best(cset, config)
    with _stage("sts"):
        sts = providers.sts.score(selection.text, input_text)
    with _stage("ppl"):
        ppl_in = providers.ppl.score(input_text)
        ppl_out = providers.ppl.score(selection.text)
    metrics = PairMetrics.build(
        sts=sts,
        ld=lexical_deviation(input_text, selection.text),
        phlen_in=ph_len(input_text),
        phlen_out=ph_len(selection.text),
        ppl_in=ppl_in,
        ppl_out=ppl_out,
        stoi_in=cset.input_audio_stoi,
        stoi_out=selection.stoi,
    )
    return PasResult(metrics, cset, selection)
