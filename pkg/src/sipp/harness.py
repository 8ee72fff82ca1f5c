"""Batch evaluation: dataset filtering, parallel sentence runs with resume,
subset selection, transcript scoring, and report rendering.

Reports come in three sections: per-condition metric means with significance
asterisks, absolute scores with a pooled input row, and (when listener data
is present) sentence-intelligibility ratios.
"""

from __future__ import annotations

import hashlib
import json
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from random import Random

from .errors import DataError
from .generation import Providers
from .mixing import NoiseSource
from .pipeline import PasResult, PipelineConfig, run_pas
from .stats import AggregateStats, aggregate
from .text_metrics import PairMetrics, TranscriptRecord, sent_int

RECORDS_NAME = "records.jsonl"
SENT_INT_NAME = "sent_int.json"


@dataclass(frozen=True)
class EvalRun:
    condition_id: str
    rows: list[PairMetrics]
    noise_label: str
    snr_db: float
    seed: int


def filter_dataset(lines: list[str], min_words: int, max_words: int) -> list[str]:
    """Keep lines whose whitespace word count falls in [min, max], inclusive."""
    if min_words > max_words:
        raise DataError(f"bad word-count bounds: {min_words} > {max_words}")
    out = []
    for line in lines:
        line = line.strip()
        if min_words <= len(line.split()) <= max_words:
            out.append(line)
    return out


def subset_top_k(rows: list[PairMetrics], k: int, key: str = "pwr_stoi") -> list[PairMetrics]:
    """The k rows with the largest `key`, descending, original order on ties."""
    if k > len(rows):
        raise DataError(f"asked for top {k} of {len(rows)} rows")
    if rows and not hasattr(rows[0], key):
        raise DataError(f"unknown metric column {key!r}")
    return sorted(rows, key=lambda r: getattr(r, key), reverse=True)[:k]


def subset_random_k(rows: list[PairMetrics], k: int, seed: int) -> list[PairMetrics]:
    """Seeded uniform sample without replacement, stable for a given seed."""
    if k > len(rows):
        raise DataError(f"asked for {k} random rows of {len(rows)}")
    return Random(seed).sample(rows, k)


def score_transcripts(references: dict[str, str],
                      transcripts: list[TranscriptRecord],
                      expected_listeners: int = 6) -> dict[str, float]:
    """Sentence intelligibility per utterance id, averaged over listeners."""
    groups: dict[str, list[TranscriptRecord]] = {}
    for t in transcripts:
        if t.utterance_id not in references:
            raise DataError(f"transcript references unknown utterance {t.utterance_id!r}")
        groups.setdefault(t.utterance_id, []).append(t)
    out = {}
    for uid, group in groups.items():
        if len(group) != expected_listeners:
            warnings.warn(
                f"utterance {uid!r} has {len(group)} transcripts, "
                f"expected {expected_listeners}"
            )
        out[uid] = sent_int(references[uid], group)
    return out


# ------------------------------------------------------------- batch runs

def _sentence_offset(seed: int, row_id: int, text: str, noise_len: int) -> int:
    digest = hashlib.sha256(f"{seed}:{row_id}:{text}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % noise_len


def _record_from_result(row_id: int, text: str, condition_id: str,
                        noise_offset: int, result: PasResult) -> dict:
    return {
        "row_id": row_id,
        "input": text,
        "condition": condition_id,
        "noise_offset_samples": noise_offset,
        "candidates": [asdict(c) for c in result.candidate_set.candidates],
        "selection": asdict(result.selection),
        "metrics": asdict(result.metrics),
    }


def metrics_from_record(record: dict) -> PairMetrics:
    return PairMetrics(**record["metrics"])


def _dump_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True) + "\n"


def evaluate_sentences(sentences: list[str], noise: NoiseSource,
                       config: PipelineConfig, providers: Providers,
                       run_dir: str | Path, seed: int, jobs: int = 1,
                       condition_id: str | None = None) -> list[dict]:
    """Run prompt-and-select over every sentence, one JSON record each.

    Records append to records.jsonl as sentences finish, so an interrupted
    run resumes where it stopped; on completion the file is rewritten in row
    order, making a finished run's bytes independent of scheduling."""
    if not sentences:
        raise DataError("empty dataset after filtering")
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    records_path = run_dir / RECORDS_NAME
    condition_id = condition_id or f"{config.template_id}(n={config.n_candidates})"

    done: dict[int, dict] = {}
    if records_path.exists():
        for line in records_path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                done[rec["row_id"]] = rec

    noise_len = len(noise.signal)
    todo = [
        (i, text) for i, text in enumerate(sentences)
        if i not in done or done[i]["input"] != text or done[i]["condition"] != condition_id
    ]
    write_lock = threading.Lock()

    def work(item):
        row_id, text = item
        offset = _sentence_offset(seed, row_id, text, noise_len)
        result = run_pas(text, noise, config, providers, offset)
        rec = _record_from_result(row_id, text, condition_id, offset, result)
        with write_lock:
            with records_path.open("a", encoding="utf-8") as fh:
                fh.write(_dump_record(rec))
            done[row_id] = rec
        return rec

    if todo:
        with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
            list(pool.map(work, todo))

    records = [done[i] for i in range(len(sentences))]
    records_path.write_text("".join(_dump_record(r) for r in records), encoding="utf-8")
    return records


def attach_sent_int(records: list[dict], sent_scores: dict[str, float]) -> list[PairMetrics]:
    """Rebuild metric rows, adding intelligibility ratios where the score map
    has both sides of a row ("<row_id>:in" / "<row_id>:out")."""
    rows = []
    for rec in records:
        m = dict(rec["metrics"])
        si_in = sent_scores.get(f"{rec['row_id']}:in")
        si_out = sent_scores.get(f"{rec['row_id']}:out")
        if si_in is not None and si_out is not None:
            if si_in <= 0:
                raise DataError(
                    f"row {rec['row_id']}: input intelligibility {si_in} is not positive"
                )
            m["sent_int_in"] = si_in
            m["sent_int_out"] = si_out
            m["pwr_sent_int"] = si_out / si_in
        rows.append(PairMetrics(**m))
    return rows


# ------------------------------------------------------------- reports

_T2_COLUMNS = [
    ("STS", "sts", False),
    ("LD", "ld", False),
    ("PWR-PhLen", "pwr_phlen", True),
    ("PWR-PPL", "pwr_ppl", True),
    ("PWR-STOI", "pwr_stoi", True),
]


def _cell(stats: AggregateStats, starred: bool) -> str:
    star = ""
    if starred and stats.p_value_vs_one is not None and stats.p_value_vs_one < 0.05:
        star = "*"
    return f"{stats.mean:.3f}{star}"


def _column(rows: list[PairMetrics], attr: str) -> AggregateStats:
    return aggregate([float(getattr(r, attr)) for r in rows])


def render_report(runs: list[EvalRun], format: str = "tsv") -> str:
    """Deterministic text report over one or more evaluation runs."""
    if not runs:
        raise DataError("no runs to report")
    if format not in ("tsv", "markdown"):
        raise DataError(f"unknown report format {format!r}")

    def table(header: list[str], body: list[list[str]]) -> list[str]:
        if format == "tsv":
            return ["\t".join(header)] + ["\t".join(r) for r in body]
        lines = ["| " + " | ".join(header) + " |",
                 "|" + "|".join([" --- "] * len(header)) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in body]
        return lines

    out: list[str] = []

    # condition means with significance marks
    body = []
    for run in runs:
        cells = [run.condition_id]
        for _, attr, starred in _T2_COLUMNS:
            cells.append(_cell(_column(run.rows, attr), starred))
        body.append(cells)
    out.append("# condition means (PWR starred when p < 0.05 vs 1.0)")
    out += table(["condition"] + [name for name, _, _ in _T2_COLUMNS], body)

    # absolute scores, conditions then the pooled input row
    out.append("")
    out.append("# absolute scores")
    body = []
    for run in runs:
        body.append([
            run.condition_id,
            f"{_column(run.rows, 'phlen_out').mean:.3f}",
            f"{_column(run.rows, 'ppl_out').mean:.3f}",
            f"{_column(run.rows, 'stoi_out').mean:.3f}",
        ])
    pooled = [r for run in runs for r in run.rows]
    body.append([
        "input",
        f"{_column(pooled, 'phlen_in').mean:.3f}",
        f"{_column(pooled, 'ppl_in').mean:.3f}",
        f"{_column(pooled, 'stoi_in').mean:.3f}",
    ])
    out += table(["condition", "PhLen", "PPL", "STOI"], body)

    # listener intelligibility, only for runs that carry it
    si_runs = [
        run for run in runs
        if any(r.pwr_sent_int is not None for r in run.rows)
    ]
    if si_runs:
        out.append("")
        out.append("# listener intelligibility (rows with transcripts)")
        body = []
        for run in si_runs:
            rows = [r for r in run.rows if r.pwr_sent_int is not None]
            cells = [run.condition_id]
            for _, attr, starred in _T2_COLUMNS:
                cells.append(_cell(_column(rows, attr), starred))
            cells.append(_cell(_column(rows, "pwr_sent_int"), True))
            body.append(cells)
        out += table(
            ["condition"] + [name for name, _, _ in _T2_COLUMNS] + ["PWR-Sent-Int"], body
        )

    return "\n".join(out) + "\n"
