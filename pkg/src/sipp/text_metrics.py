"""Textual metrics: lexical deviation, phoneme counts, edit distance,
listener recognition rates, and out/in pairwise ratios.

G2P goes through a bundled pronunciation lexicon (CMU plain-text format,
first variant wins, stress digits stripped) with deterministic
letter-to-sound rules for everything out of vocabulary. Lemmatization is an
irregular table plus ordered suffix rules; it is a desk-scale approximation,
deterministic by construction, not a linguistics engine.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import DataError

# the 39-symbol ARPABET inventory (stress digits never stored)
PHONEME_INVENTORY = frozenset(
    "AA AE AH AO AW AY B CH D DH EH ER EY F G HH IH IY JH K L M N NG OW OY "
    "P R S SH T TH UH UW V W Y Z ZH".split()
)

_VOWELS = "aeiou"
_WORD_RE = re.compile(r"[a-z0-9']+")


@dataclass(frozen=True)
class PhonemeSeq:
    phonemes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "phonemes", tuple(self.phonemes))
        bad = [p for p in self.phonemes if p not in PHONEME_INVENTORY]
        if bad:
            raise DataError(f"unknown phoneme symbols: {bad[:5]}")

    def __len__(self) -> int:
        return len(self.phonemes)

    def __iter__(self):
        return iter(self.phonemes)


@dataclass(frozen=True)
class TranscriptRecord:
    utterance_id: str
    listener_id: str
    transcript: str

    def __post_init__(self):
        if not self.utterance_id:
            raise DataError("transcript record without an utterance_id")


# ---------------------------------------------------------------- lemmas

_IRREGULAR_LEMMAS = {
    "am": "be", "is": "be", "are": "be", "was": "be", "were": "be",
    "been": "be", "being": "be",
    "has": "have", "had": "have", "having": "have",
    "does": "do", "did": "do", "done": "do", "doing": "do",
    "goes": "go", "went": "go", "gone": "go", "going": "go",
    "says": "say", "said": "say", "saying": "say",
    "made": "make", "making": "make",
    "took": "take", "taken": "take", "taking": "take",
    "came": "come", "coming": "come",
    "saw": "see", "seen": "see", "seeing": "see",
    "got": "get", "gotten": "get", "getting": "get",
    "ran": "run", "running": "run",
    "gave": "give", "given": "give", "giving": "give",
    "found": "find", "told": "tell", "thought": "think",
    "knew": "know", "known": "know",
    "sang": "sing", "singing": "sing", "sat": "sit", "sitting": "sit",
    "children": "child", "men": "man", "women": "woman",
    "feet": "foot", "teeth": "tooth", "mice": "mouse", "geese": "goose",
}

# words the suffix rules must leave alone
_NO_STRIP = frozenset(
    "this his its us bus gas yes news lens always perhaps thus plus across "
    "besides during morning evening anything everything nothing something "
    "spring string indeed speed feed seed deed need hundred"
    .split()
)


def _undouble(stem: str) -> str | None:
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in "lsz" + _VOWELS:
        return stem[:-1]
    return None


def _add_e(stem: str) -> str | None:
    # make/lik/us -> make/like/use; larg/mov -> large/move
    if not stem or stem[-1] in _VOWELS + "wxy":
        return None
    if len(stem) <= 3 and len(stem) >= 2 and stem[-2] in _VOWELS and (
        len(stem) < 3 or stem[-3] not in _VOWELS
    ):
        return stem + "e"
    if stem[-1] in "gvzc" and len(stem) >= 3:
        return stem + "e"
    return None


def _strip_verbal(word: str, suffix: str) -> str:
    stem = word[: -len(suffix)]
    return _undouble(stem) or _add_e(stem) or stem


def lemma(token: str) -> str:
    """Lowercase lemma of one token; unknown shapes pass through unchanged."""
    token = token.lower()
    if token in _IRREGULAR_LEMMAS:
        return _IRREGULAR_LEMMAS[token]
    if token in _NO_STRIP or len(token) <= 3:
        return token
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith("ied") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith("es") and token[:-2].endswith(("ss", "x", "z", "ch", "sh")):
        return token[:-2]
    if token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    if token.endswith("ing") and len(token) > 5:
        return _strip_verbal(token, "ing")
    if token.endswith("ed") and not token.endswith("eed"):
        return _strip_verbal(token, "ed")
    if token.endswith("est") and len(token) > 5:
        return _strip_verbal(token, "est")
    if token.endswith("er") and len(token) > 4:
        return _strip_verbal(token, "er")
    return token


def lemma_tokens(text: str) -> set[str]:
    """Set of lowercase lemmas of the words in text; punctuation dropped."""
    out = set()
    for tok in _WORD_RE.findall(text.lower()):
        tok = tok.strip("'")
        if tok:
            out.add(lemma(tok))
    return out


def lexical_deviation(a: str, b: str) -> float:
    """1 - Jaccard overlap of the two texts' lemma sets; 0 for two empties."""
    la, lb = lemma_tokens(a), lemma_tokens(b)
    union = la | lb
    if not union:
        return 0.0
    return 1.0 - len(la & lb) / len(union)


# ---------------------------------------------------------------- G2P

_LEXICON_FILE = "cmudict_builtin.txt"

# ordered letter-to-sound rules; longest pattern wins at each position
_LTS_RULES = [
    ("tion", ("SH", "AH", "N")),
    ("sion", ("ZH", "AH", "N")),
    ("igh", ("AY",)),
    ("ch", ("CH",)),
    ("sh", ("SH",)),
    ("th", ("TH",)),
    ("ph", ("F",)),
    ("wh", ("W",)),
    ("ck", ("K",)),
    ("ng", ("NG",)),
    ("qu", ("K", "W")),
    ("ee", ("IY",)),
    ("ea", ("IY",)),
    ("oo", ("UW",)),
    ("ou", ("AW",)),
    ("ow", ("OW",)),
    ("oi", ("OY",)),
    ("oy", ("OY",)),
    ("ai", ("EY",)),
    ("ay", ("EY",)),
    ("oa", ("OW",)),
    ("au", ("AO",)),
    ("aw", ("AO",)),
    ("ar", ("AA", "R")),
    ("er", ("ER",)),
    ("ir", ("ER",)),
    ("or", ("AO", "R")),
    ("ur", ("ER",)),
    ("a", ("AE",)),
    ("b", ("B",)),
    ("c", ("K",)),
    ("d", ("D",)),
    ("e", ("EH",)),
    ("f", ("F",)),
    ("g", ("G",)),
    ("h", ("HH",)),
    ("i", ("IH",)),
    ("j", ("JH",)),
    ("k", ("K",)),
    ("l", ("L",)),
    ("m", ("M",)),
    ("n", ("N",)),
    ("o", ("AA",)),
    ("p", ("P",)),
    ("q", ("K",)),
    ("r", ("R",)),
    ("s", ("S",)),
    ("t", ("T",)),
    ("u", ("AH",)),
    ("v", ("V",)),
    ("w", ("W",)),
    ("x", ("K", "S")),
    ("y", ("Y",)),
    ("z", ("Z",)),
]

_DIGIT_PHONES = {
    "0": ("Z", "IH", "R", "OW"),
    "1": ("W", "AH", "N"),
    "2": ("T", "UW"),
    "3": ("TH", "R", "IY"),
    "4": ("F", "AO", "R"),
    "5": ("F", "AY", "V"),
    "6": ("S", "IH", "K", "S"),
    "7": ("S", "EH", "V", "AH", "N"),
    "8": ("EY", "T"),
    "9": ("N", "AY", "N"),
}

_STRESS_RE = re.compile(r"\d")


@lru_cache(maxsize=1)
def _pronunciations() -> dict[str, tuple[str, ...]]:
    text = resources.files("sipp").joinpath("data", _LEXICON_FILE).read_text()
    table: dict[str, tuple[str, ...]] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(";;;"):
            continue
        head, *phones = line.split()
        word = head.split("(")[0].lower()  # WORD(2) marks an alternate
        if word not in table:
            table[word] = tuple(_STRESS_RE.sub("", p) for p in phones)
    return table


def _letter_to_sound(word: str) -> list[str]:
    if len(word) > 3 and word.endswith("e") and word[-2] not in _VOWELS:
        word = word[:-1]  # final silent e
    out: list[str] = []
    i = 0
    while i < len(word):
        if word[i] in _DIGIT_PHONES:
            out.extend(_DIGIT_PHONES[word[i]])
            i += 1
            continue
        for pat, phones in _LTS_RULES:
            if word.startswith(pat, i):
                out.extend(phones)
                i += len(pat)
                break
        else:
            i += 1  # apostrophes and anything unmapped are silent
    return out


def phoneme_transcript(text: str) -> PhonemeSeq:
    """Phoneme sequence of the text, words concatenated, no boundary marks."""
    table = _pronunciations()
    phones: list[str] = []
    for tok in _WORD_RE.findall(text.lower()):
        tok = tok.strip("'")
        if not tok:
            continue
        hit = table.get(tok)
        if hit is not None:
            phones.extend(hit)
        else:
            phones.extend(_letter_to_sound(tok))
    return PhonemeSeq(tuple(phones))


def ph_len(text: str) -> int:
    return len(phoneme_transcript(text))


# ---------------------------------------------------------------- distances

def edit_distance(a, b) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    sa = list(a.phonemes) if isinstance(a, PhonemeSeq) else list(a)
    sb = list(b.phonemes) if isinstance(b, PhonemeSeq) else list(b)
    if len(sa) < len(sb):
        sa, sb = sb, sa
    prev = list(range(len(sb) + 1))
    for i, ca in enumerate(sa, start=1):
        cur = [i] + [0] * len(sb)
        for j, cb in enumerate(sb, start=1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ca != cb),
            )
        prev = cur
    return prev[-1]


def recognition_rate(reference: PhonemeSeq, hypothesis: PhonemeSeq) -> float:
    """Share of the reference correctly recognized, floored at zero."""
    if len(reference) == 0:
        raise DataError("recognition rate needs a non-empty reference")
    return max(0.0, 1.0 - edit_distance(reference, hypothesis) / len(reference))


def sent_int(reference_text: str, transcripts: list[TranscriptRecord]) -> float:
    """Mean listener recognition rate for one reference sentence."""
    if not transcripts:
        raise DataError("sentence intelligibility needs at least one transcript")
    ref = phoneme_transcript(reference_text)
    if len(ref) == 0:
        raise DataError(f"reference has no phonemes: {reference_text!r}")
    rates = [recognition_rate(ref, phoneme_transcript(t.transcript)) for t in transcripts]
    return sum(rates) / len(rates)


def pwr(out_value: float, in_value: float) -> float:
    """Pairwise ratio: metric of the output over metric of its input."""
    if in_value <= 0:
        raise DataError(f"pairwise ratio needs a positive denominator, got {in_value}")
    return out_value / in_value


# ---------------------------------------------------------------- records

@dataclass(frozen=True)
class PairMetrics:
    """Every per-sentence column of the evaluation report."""

    sts: float
    ld: float
    phlen_in: int
    phlen_out: int
    ppl_in: float
    ppl_out: float
    stoi_in: float
    stoi_out: float
    pwr_phlen: float
    pwr_ppl: float
    pwr_stoi: float
    sent_int_in: float | None = None
    sent_int_out: float | None = None
    pwr_sent_int: float | None = None

    def __post_init__(self):
        checks = [
            (self.pwr_phlen, self.phlen_out, self.phlen_in),
            (self.pwr_ppl, self.ppl_out, self.ppl_in),
            (self.pwr_stoi, self.stoi_out, self.stoi_in),
        ]
        if self.pwr_sent_int is not None:
            checks.append((self.pwr_sent_int, self.sent_int_out, self.sent_int_in))
        for ratio, out_v, in_v in checks:
            if in_v and abs(ratio - out_v / in_v) > 1e-9:
                raise DataError(
                    f"inconsistent ratio {ratio} for out={out_v} in={in_v}"
                )

    @classmethod
    def build(cls, *, sts, ld, phlen_in, phlen_out, ppl_in, ppl_out,
              stoi_in, stoi_out, sent_int_in=None, sent_int_out=None):
        kw = {}
        if sent_int_in is not None and sent_int_out is not None:
            kw = {
                "sent_int_in": sent_int_in,
                "sent_int_out": sent_int_out,
                "pwr_sent_int": pwr(sent_int_out, sent_int_in),
            }
        return cls(
            sts=sts, ld=ld,
            phlen_in=phlen_in, phlen_out=phlen_out,
            ppl_in=ppl_in, ppl_out=ppl_out,
            stoi_in=stoi_in, stoi_out=stoi_out,
            pwr_phlen=pwr(phlen_out, phlen_in),
            pwr_ppl=pwr(ppl_out, ppl_in),
            pwr_stoi=pwr(stoi_out, stoi_in),
            **kw,
        )


def read_transcripts(path: str | Path) -> list[TranscriptRecord]:
    """Load listener transcripts from a UTF-8 CSV with the header
    utterance_id,listener_id,transcript."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            fields = reader.fieldnames or []
            missing = {"utterance_id", "listener_id", "transcript"} - set(fields)
            if missing:
                raise DataError(f"{path}: missing transcript columns {sorted(missing)}")
            return [
                TranscriptRecord(
                    row["utterance_id"] or "",
                    row["listener_id"] or "",
                    row["transcript"] or "",
                )
                for row in reader
            ]
    except OSError as exc:
        raise DataError(f"cannot read transcripts {path}: {exc}") from exc
