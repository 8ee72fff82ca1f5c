"""Command-line surface: mix, stoi, paraphrase, evaluate, score-transcripts,
report.

Exit codes: 0 success, 2 audio I/O, 3 DSP, 4 data validation, 5 remote
service. Run directories hold records.jsonl (one JSON object per sentence),
manifest.json, and rendered reports; reruns resume from existing records.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .audio import read_wav, resample, write_wav
from .config import (
    RunSettings,
    build_providers,
    load_config,
    manifest_dict,
    settings_from_mapping,
    write_manifest,
)
from .errors import DataError, SippError
from .harness import (
    RECORDS_NAME,
    SENT_INT_NAME,
    EvalRun,
    attach_sent_int,
    evaluate_sentences,
    filter_dataset,
    render_report,
    score_transcripts,
)
from .mixing import MixSpec, NoiseSource, mix_at_snr, snr_db
from .pipeline import run_pas
from .stoi import StoiConfig, stoi
from .text_metrics import read_transcripts


def _settings(args) -> RunSettings:
    raw = load_config(args.config) if args.config else {}
    return settings_from_mapping(
        raw, provider=args.provider, seed=args.seed, jobs=args.jobs)


def _load_noise(settings: RunSettings, override: str | None) -> NoiseSource:
    path = override or settings.noise_wav
    if not path:
        raise DataError("no noise WAV configured (set noise_wav or pass --noise-wav)")
    sig = read_wav(path)
    rate = StoiConfig().analysis_rate_hz
    return NoiseSource(resample(sig, rate), label=settings.pipeline.noise_label)


# ------------------------------------------------------------- subcommands

def cmd_mix(args) -> int:
    clean = read_wav(args.clean_wav)
    noise = resample(read_wav(args.noise_wav), clean.sample_rate_hz)
    mixed, scaled_noise = mix_at_snr(clean, NoiseSource(noise),
                                     MixSpec(target_snr_db=args.snr_db))
    print(f"measured SNR: {snr_db(clean, scaled_noise):.6f} dB")
    peak = float(np.max(np.abs(mixed.samples))) if len(mixed) else 0.0
    # 16-bit full scale is 32767/32768; normalizing to it keeps the written
    # file clip-free, and scaling the whole mixture leaves the SNR unchanged
    headroom = 32767.0 / 32768.0
    if peak > headroom:
        mixed = mixed.scaled(headroom / peak)
        print(f"peak-normalized by {headroom / peak:.6f}")
    write_wav(mixed, args.out_wav)
    return 0


def cmd_stoi(args) -> int:
    rate = StoiConfig().analysis_rate_hz
    clean = resample(read_wav(args.clean_wav), rate)
    degraded = resample(read_wav(args.degraded_wav), rate)
    print(f"{float(stoi(clean, degraded)):.6f}")
    return 0


def cmd_paraphrase(args) -> int:
    settings = _settings(args)
    if args.n is not None:
        from dataclasses import replace
        settings = replace(
            settings,
            pipeline=replace(settings.pipeline, n_candidates=args.n),
            generation=replace(settings.generation, n_candidates=args.n),
        )
    providers = build_providers(settings)
    noise = _load_noise(settings, args.noise_wav)
    result = run_pas(args.text, noise, settings.pipeline, providers,
                     noise_offset_samples=0)
    m = result.metrics
    sel = result.selection
    print(sel.text)
    print(f"selected_index={sel.selected_index} "
          f"of {len(result.candidate_set.candidates)}")
    print(f"stoi_in={m.stoi_in:.6f} stoi_out={m.stoi_out:.6f} "
          f"pwr_stoi={m.pwr_stoi:.6f}")
    print(f"sts={m.sts:.6f} ld={m.ld:.6f} "
          f"pwr_phlen={m.pwr_phlen:.6f} pwr_ppl={m.pwr_ppl:.6f}")
    return 0


def _read_dataset(path: Path) -> tuple[list[str], str]:
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    digest = hashlib.sha256(blob).hexdigest()
    text = blob.decode("utf-8")
    if path.suffix.lower() == ".csv":
        import csv
        import io
        reader = csv.DictReader(io.StringIO(text))
        fields = reader.fieldnames or []
        if "text" not in fields:
            raise DataError(f"dataset CSV needs a text column, has {fields}")
        lines = [row["text"] for row in reader]
    else:
        lines = text.splitlines()
    return lines, digest


def cmd_evaluate(args) -> int:
    if not args.out:
        raise DataError("evaluate needs --out for the run directory")
    settings = _settings(args)
    providers = build_providers(settings)
    noise = _load_noise(settings, args.noise_wav)
    lines, digest = _read_dataset(Path(args.dataset))
    sentences = filter_dataset(lines, settings.min_words, settings.max_words)
    out_dir = Path(args.out)
    try:
        records = evaluate_sentences(
            sentences, noise, settings.pipeline, providers, out_dir,
            seed=settings.seed, jobs=settings.resolved_jobs())
    except SippError:
        print(f"partial run left in {out_dir}; rerun to resume", file=sys.stderr)
        raise
    write_manifest(out_dir / "manifest.json",
                   manifest_dict(settings, str(out_dir), args.config, digest))
    _write_reports([_run_from_dir(out_dir)], out_dir)
    print(f"evaluated {len(records)} sentences -> {out_dir}")
    return 0


def _load_records(run_dir: Path) -> list[dict]:
    path = run_dir / RECORDS_NAME
    if not path.exists():
        raise DataError(f"no {RECORDS_NAME} in {run_dir}")
    records = [json.loads(line)
               for line in path.read_text(encoding="utf-8").splitlines()
               if line.strip()]
    if not records:
        raise DataError(f"empty {RECORDS_NAME} in {run_dir}")
    return sorted(records, key=lambda r: r["row_id"])


def _run_from_dir(run_dir: Path) -> EvalRun:
    records = _load_records(run_dir)
    scores = {}
    si_path = run_dir / SENT_INT_NAME
    if si_path.exists():
        scores = json.loads(si_path.read_text(encoding="utf-8"))
    noise_label, snr, seed = "noise", 0.0, 0
    manifest_path = run_dir / "manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        noise_label = manifest["pipeline"]["noise_label"]
        snr = manifest["pipeline"]["target_snr_db"]
        seed = manifest["seed"]
    return EvalRun(
        condition_id=records[0]["condition"],
        rows=attach_sent_int(records, scores),
        noise_label=noise_label, snr_db=snr, seed=seed,
    )


def _write_reports(runs: list[EvalRun], out_dir: Path) -> str:
    tsv = render_report(runs, format="tsv")
    (out_dir / "report.tsv").write_text(tsv, encoding="utf-8")
    (out_dir / "report.md").write_text(
        render_report(runs, format="markdown"), encoding="utf-8")
    return tsv


def cmd_score_transcripts(args) -> int:
    run_dir = Path(args.run_dir)
    records = _load_records(run_dir)
    references = {}
    for rec in records:
        references[f"{rec['row_id']}:in"] = rec["input"]
        references[f"{rec['row_id']}:out"] = rec["selection"]["text"]
    transcripts = read_transcripts(args.transcripts_csv)
    scores = score_transcripts(references, transcripts)
    out_path = Path(args.out) if args.out else run_dir / SENT_INT_NAME
    if out_path.is_dir():
        out_path = out_path / SENT_INT_NAME
    out_path.write_text(
        json.dumps(scores, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"scored {len(scores)} utterances -> {out_path}")
    return 0


def cmd_report(args) -> int:
    runs = [_run_from_dir(Path(d)) for d in args.run_dirs]
    out_dir = Path(args.out) if args.out else Path(args.run_dirs[0])
    if not out_dir.is_dir():
        raise DataError(f"output directory {out_dir} does not exist")
    tsv = _write_reports(runs, out_dir)
    sys.stdout.write(tsv)
    return 0


# ------------------------------------------------------------- wiring

def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="key=value config file")
    shared.add_argument("--provider", choices=("mock", "http"))
    shared.add_argument("--seed", type=int)
    shared.add_argument("--jobs", type=int)
    shared.add_argument("--out", help="output file or run directory")

    parser = argparse.ArgumentParser(
        prog="sipp",
        description="Paraphrase sentences for intelligibility in noise, "
                    "score them, and report the results.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mix", parents=[shared],
                       help="mix a noise bed into a clean WAV at an exact SNR")
    p.add_argument("clean_wav")
    p.add_argument("noise_wav")
    p.add_argument("out_wav")
    p.add_argument("--snr-db", type=float, required=True)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("stoi", parents=[shared],
                       help="short-time objective intelligibility of a pair")
    p.add_argument("clean_wav")
    p.add_argument("degraded_wav")
    p.set_defaults(func=cmd_stoi)

    p = sub.add_parser("paraphrase", parents=[shared],
                       help="prompt-and-select one sentence")
    p.add_argument("text")
    p.add_argument("--noise-wav")
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_paraphrase)

    p = sub.add_parser("evaluate", parents=[shared],
                       help="run the pipeline over a dataset into a run directory")
    p.add_argument("dataset")
    p.add_argument("--noise-wav")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score-transcripts", parents=[shared],
                       help="sentence intelligibility from listener transcripts")
    p.add_argument("run_dir")
    p.add_argument("transcripts_csv")
    p.set_defaults(func=cmd_score_transcripts)

    p = sub.add_parser("report", parents=[shared],
                       help="render reports over finished run directories")
    p.add_argument("run_dirs", nargs="+")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SippError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
