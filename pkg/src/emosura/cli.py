"""Command-line interface.

Subcommands: curate, decompose, verify, match, score, perturb, correlate,
report. Configuration precedence is CLI flag > environment variable > config
file (KEY=VALUE lines) > built-in default. Logs are JSONL on stderr; stdout
carries machine-readable summaries only.

Exit codes: 0 success, 1 one or more samples errored, 2 configuration or
fixture errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import report as report_mod
from .backends import (
    API_KEY_ENV,
    AUDIO_ENDPOINT_ENV,
    BackendConfig,
    DEFAULT_AUDIO_MODEL,
    DEFAULT_TEXT_MODEL,
    HttpBackend,
    TEXT_ENDPOINT_ENV,
)
from .bench import curate as curate_mod
from .bench import perturb as perturb_mod
from .cache import ResponseCache
from .decompose import decompose_caption
from .errors import (
    BackendError,
    ConfigError,
    JoinMismatch,
    MissingFixture,
    NoSubstitutableSpan,
)
from .manifest import manifest_digest, read_manifest, record_to_dict, write_manifest
from .matching import match_apus
from .mock import OracleBackend
from .pipeline import EvalConfig, STATUS_ERRORED, run_scoring, write_run_manifest
from .types import (
    AudioRef,
    DEFAULT_DESCRIPTIVE_ATTRIBUTES,
    GENERATED,
    PERTURBATION_TYPES,
    REFERENCE,
    VerificationResult,
)
from .verify import verify_apus

EXIT_OK = 0
EXIT_SAMPLE_ERRORS = 1
EXIT_CONFIG_ERROR = 2

logger = logging.getLogger("emosura")


class _JsonLineFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "ts": round(record.created, 3),
            "level": record.levelname.lower(),
            "logger": record.name,
            "event": record.getMessage(),
        }
        return json.dumps(payload, ensure_ascii=False)


def _setup_logging(level: str) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonLineFormatter())
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel({"error": logging.ERROR, "warn": logging.WARNING,
                   "info": logging.INFO, "debug": logging.DEBUG}[level])


def _load_config_file(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    values = {}
    try:
        for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{i}: expected KEY=VALUE")
            key, _, value = line.partition("=")
            values[key.strip().lower()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    return values


def _resolve(flag_value, key: str, file_values: dict, default):
    """CLI flag > EMOSURA_<KEY> env var > config file > default."""
    if flag_value is not None:
        return flag_value
    env = os.environ.get(f"EMOSURA_{key.upper()}")
    if env is not None:
        return env
    if key in file_values:
        return file_values[key]
    return default


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mock", metavar="FIXTURE_DIR", default=None,
                   help="use the oracle mock backend reading FIXTURE_DIR/truth.json")
    p.add_argument("--text-endpoint", default=None,
                   help=f"text model endpoint URL (env {TEXT_ENDPOINT_ENV})")
    p.add_argument("--audio-endpoint", default=None,
                   help=f"audio model endpoint URL (env {AUDIO_ENDPOINT_ENV})")
    p.add_argument("--text-model", default=None,
                   help=f"text model id (default {DEFAULT_TEXT_MODEL})")
    p.add_argument("--audio-model", default=None,
                   help=f"audio model id (default {DEFAULT_AUDIO_MODEL})")
    p.add_argument("--cache-dir", default=None,
                   help="response cache directory (default <out>/cache)")
    p.add_argument("--config", default=None, help="KEY=VALUE config file")


def _add_common_eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--audio-root", default=None,
                   help="directory audio paths are relative to (default: manifest dir)")
    p.add_argument("--no-gt-context", action="store_true",
                   help="leave the verification prompt's ground-truth slot empty")
    p.add_argument("--descriptive-attrs", default=None,
                   help="comma-separated attributes counted as descriptive "
                        f"(default {','.join(sorted(DEFAULT_DESCRIPTIVE_ATTRIBUTES))})")
    p.add_argument("--extended-attributes", action="store_true",
                   help="allow vocal_event/texture/tempo_dynamics attributes")
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel samples (default: logical cores)")


def _make_backends(args, file_values):
    """(text_backend, audio_backend) per flags; oracle mock when --mock."""
    if args.mock:
        truth_path = Path(args.mock) / "truth.json"
        if not truth_path.is_file():
            raise ConfigError(f"mock fixture dir has no truth.json: {args.mock}")
        oracle = OracleBackend.from_file(truth_path, strict=True)
        return oracle, oracle
    text_url = _resolve(args.text_endpoint, "text_endpoint", file_values, None)
    audio_url = _resolve(args.audio_endpoint, "audio_endpoint", file_values, None)
    if not text_url or not audio_url:
        raise ConfigError(
            "need --mock or both endpoints "
            f"(--text-endpoint/{TEXT_ENDPOINT_ENV}, --audio-endpoint/{AUDIO_ENDPOINT_ENV})"
        )
    text = HttpBackend(BackendConfig(endpoint_url=text_url, api_key_env=API_KEY_ENV))
    audio = HttpBackend(BackendConfig(endpoint_url=audio_url, api_key_env=API_KEY_ENV))
    return text, audio


def _eval_config(args, file_values) -> EvalConfig:
    descriptive = _resolve(args.descriptive_attrs, "descriptive_attrs", file_values, None)
    attrs = (
        frozenset(a.strip() for a in descriptive.split(",") if a.strip())
        if descriptive else DEFAULT_DESCRIPTIVE_ATTRIBUTES
    )
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    return EvalConfig(
        text_model=_resolve(args.text_model, "text_model", file_values, DEFAULT_TEXT_MODEL),
        audio_model=_resolve(args.audio_model, "audio_model", file_values, DEFAULT_AUDIO_MODEL),
        descriptive_attributes=attrs,
        extended_attributes=args.extended_attributes,
        use_gt_context=not args.no_gt_context,
        jobs=max(1, int(jobs)),
    )


# ----------------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------------

def cmd_curate(args) -> int:
    records = read_manifest(args.manifest) if Path(args.manifest).stat().st_size else []
    if args.audio_root:
        root = Path(args.audio_root)
        present, missing = [], []
        for record in records:
            (present if (root / record.audio_path).is_file() else missing).append(record)
        for record in missing:
            logger.warning("audio file missing for %s", record.sample_id)
        missing_rejects = [(r, "audio file missing") for r in missing]
        records = present
    else:
        missing_rejects = []
    selected, rejects = curate_mod.curate(records, cap=args.cap)
    rejects = missing_rejects + rejects

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(out_dir / "curated.jsonl", selected)
    with open(out_dir / "rejects.jsonl", "w", encoding="utf-8") as fh:
        for record, reason in rejects:
            fh.write(json.dumps({"sample_id": record.sample_id, "reason": reason},
                                ensure_ascii=False) + "\n")
    counts = curate_mod.bin_counts(selected)
    with open(out_dir / "bins.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "count"])
        for (row, col) in sorted(counts):
            writer.writerow([row, col, counts[(row, col)]])
    print(json.dumps({"selected": len(selected), "rejected": len(rejects),
                      "bins_occupied": len(counts)}, sort_keys=True))
    return EXIT_OK


def _detection_from_rows(records, rows) -> dict | None:
    """Detection rates when the manifest carries perturbation metadata."""
    perturbed = {r.sample_id: r.perturbation for r in records if r.perturbation}
    if not perturbed:
        return None
    finals: dict[str, dict[str, float | None]] = {}
    for row in rows:
        finals.setdefault(row["sample_id"], {})[row["system_id"]] = row["final"]
    evaluations = []
    for sample_id, perturbation in sorted(perturbed.items()):
        cells = finals.get(sample_id, {})
        gt = cells.get("gt")
        sabotaged = cells.get("sabotaged")
        if gt is None or sabotaged is None:
            continue
        evaluations.append((perturbation["type"], sabotaged < gt))
    return perturb_mod.detection_rate(evaluations) if evaluations else None


def cmd_score(args) -> int:
    file_values = _load_config_file(args.config)
    text_backend, audio_backend = _make_backends(args, file_values)
    config = _eval_config(args, file_values)
    records = read_manifest(args.manifest)
    audio_root = args.audio_root or str(Path(args.manifest).parent)
    out_dir = Path(args.out)
    cache = ResponseCache(args.cache_dir or out_dir / "cache")

    result = run_scoring(
        records, text_backend, audio_backend, config,
        cache=cache, audio_root=audio_root,
        input_digest=manifest_digest(args.manifest),
    )
    detection = _detection_from_rows(records, result.rows)
    summary = report_mod.emit_report(
        result.rows, out_dir,
        format_failure_rate=result.manifest["verify_format_failure_rate"],
        detection_rates=detection,
        extra={"decompose_format_failures": result.manifest["decompose_format_failures"]},
    )
    write_run_manifest(result, out_dir / "run_manifest.json")
    print(json.dumps({
        "run_id": result.manifest["run_id"],
        "rows": len(result.rows),
        "errored": sum(1 for o in result.outcomes if o.status == STATUS_ERRORED),
        "out": str(out_dir),
        "format_failure_rate": summary.get("format_failure_rate"),
    }, sort_keys=True))
    return EXIT_SAMPLE_ERRORS if result.has_errors else EXIT_OK


def cmd_decompose(args) -> int:
    file_values = _load_config_file(args.config)
    text_backend, _audio = _make_backends(args, file_values)
    config = _eval_config(args, file_values)
    records = read_manifest(args.manifest)
    cache = ResponseCache(args.cache_dir) if args.cache_dir else None
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for record in sorted(records, key=lambda r: r.sample_id):
            sets = [decompose_caption(
                f"{record.sample_id}::ref", record.reference_caption, text_backend,
                origin=REFERENCE, model_id=config.text_model, cache=cache,
                extended_attributes=config.extended_attributes)]
            for system_id in sorted(record.generated_captions):
                sets.append(decompose_caption(
                    f"{record.sample_id}::{system_id}",
                    record.generated_captions[system_id], text_backend,
                    origin=GENERATED, model_id=config.text_model, cache=cache,
                    extended_attributes=config.extended_attributes))
            for apu_set in sets:
                fh.write(json.dumps(apu_set.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
                n += 1
    print(json.dumps({"caption_sets": n, "out": str(out_path)}, sort_keys=True))
    return EXIT_OK


def cmd_verify(args) -> int:
    file_values = _load_config_file(args.config)
    text_backend, audio_backend = _make_backends(args, file_values)
    config = _eval_config(args, file_values)
    records = read_manifest(args.manifest)
    audio_root = Path(args.audio_root or Path(args.manifest).parent)
    cache = ResponseCache(args.cache_dir) if args.cache_dir else None
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    n_failures = 0
    n_verdicts = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for record in sorted(records, key=lambda r: r.sample_id):
            audio_bytes = (audio_root / record.audio_path).read_bytes()
            audio = AudioRef(record.sample_id, str(audio_root / record.audio_path),
                             record.duration_s, AudioRef.digest_bytes(audio_bytes))
            gt = record.reference_caption if config.use_gt_context else ""
            for system_id in sorted(record.generated_captions):
                apu_set = decompose_caption(
                    f"{record.sample_id}::{system_id}",
                    record.generated_captions[system_id], text_backend,
                    origin=GENERATED, model_id=config.text_model, cache=cache,
                    extended_attributes=config.extended_attributes)
                verification = verify_apus(
                    apu_set, audio, gt, audio_backend, model_id=config.audio_model,
                    max_inflight=config.max_inflight, audio_bytes=audio_bytes, cache=cache)
                n_verdicts += len(verification.verdicts)
                n_failures += verification.failure_count
                fh.write(json.dumps(verification.to_dict(), ensure_ascii=False,
                                    sort_keys=True) + "\n")
    rate = n_failures / n_verdicts if n_verdicts else 0.0
    print(json.dumps({"verdicts": n_verdicts, "format_failure_rate": rate,
                      "out": str(out_path)}, sort_keys=True))
    return EXIT_OK


def cmd_match(args) -> int:
    file_values = _load_config_file(args.config)
    text_backend, _audio = _make_backends(args, file_values)
    config = _eval_config(args, file_values)
    records = read_manifest(args.manifest)
    cache = ResponseCache(args.cache_dir) if args.cache_dir else None
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for record in sorted(records, key=lambda r: r.sample_id):
            reference = decompose_caption(
                f"{record.sample_id}::ref", record.reference_caption, text_backend,
                origin=REFERENCE, model_id=config.text_model, cache=cache,
                extended_attributes=config.extended_attributes)
            for system_id in sorted(record.generated_captions):
                generated = decompose_caption(
                    f"{record.sample_id}::{system_id}",
                    record.generated_captions[system_id], text_backend,
                    origin=GENERATED, model_id=config.text_model, cache=cache,
                    extended_attributes=config.extended_attributes)
                # Stage-only run: no verification available, so the extra set
                # is empty and only the pair assignments are reported.
                empty = VerificationResult(apu_set_ref=generated.caption_id, verdicts=())
                match = match_apus(generated, reference, empty, text_backend,
                                   model_id=config.text_model, cache=cache)
                row = {"caption_id": generated.caption_id}
                row.update(match.to_dict())
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
                n += 1
    print(json.dumps({"matches": n, "out": str(out_path)}, sort_keys=True))
    return EXIT_OK


def cmd_perturb(args) -> int:
    types = [t.strip().upper() for t in args.types.split(",") if t.strip()]
    for t in types:
        if t not in PERTURBATION_TYPES:
            raise ConfigError(f"unknown perturbation type {t!r} "
                              f"(choose from {', '.join(PERTURBATION_TYPES)})")
    records = read_manifest(args.manifest)
    records.sort(key=lambda r: r.sample_id)
    lexicon_dir = args.lexicon_dir
    out_records = []
    skipped = 0
    for perturbation_type in types:
        produced = 0
        for record in records:
            if produced >= args.per_type:
                break
            try:
                sabotaged, spec = perturb_mod.perturb(
                    record.reference_caption, None, perturbation_type,
                    lexicon_dir=lexicon_dir)
            except NoSubstitutableSpan:
                skipped += 1
                logger.warning("no substitutable span (type %s) in %s",
                               perturbation_type, record.sample_id)
                continue
            row = record_to_dict(record)
            row["sample_id"] = f"{record.sample_id}__pert{perturbation_type}"
            row["generated_captions"] = {
                "gt": record.reference_caption,
                "sabotaged": sabotaged,
            }
            row["perturbation"] = spec.to_dict()
            out_records.append(row)
            produced += 1
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for row in out_records:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    print(json.dumps({"perturbed": len(out_records), "skipped": skipped,
                      "out": str(out_path)}, sort_keys=True))
    return EXIT_OK


def _read_scores_csv(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            parsed: dict = {}
            for key, value in row.items():
                if key in ("sample_id", "system_id"):
                    parsed[key] = value
                elif value in ("n/a", "", None):
                    parsed[key] = None
                else:
                    parsed[key] = float(value)
            rows.append(parsed)
    return rows


def cmd_correlate(args) -> int:
    rows = _read_scores_csv(args.scores)
    mos: dict[tuple[str, str | None], float] = {}
    with open(args.mos, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["sample_id"], row.get("system_id") or None)
            mos[key] = float(row["mos"])

    joined = []
    matched_keys = set()
    unmatched_rows = set()
    for row in rows:
        key = (row["sample_id"], row.get("system_id"))
        value = mos.get(key, mos.get((row["sample_id"], None)))
        if value is None:
            unmatched_rows.add(row["sample_id"])
            continue
        matched_keys.add(key[0])
        joined.append(dict(row, mos_mean=value))
    unmatched_mos = {sid for sid, _sys in mos if sid not in matched_keys}
    if unmatched_rows or unmatched_mos:
        raise JoinMismatch(unmatched_rows | unmatched_mos)

    summary = report_mod.build_summary(joined)
    report_mod.write_summary_json(summary, args.out)
    print(json.dumps({"joined_rows": len(joined), "out": args.out}, sort_keys=True))
    return EXIT_OK


def cmd_report(args) -> int:
    rows = _read_scores_csv(args.scores)
    out_dir = Path(args.out)
    summary = report_mod.emit_report(rows, out_dir)
    print(json.dumps({"rows": len(rows), "out": str(out_dir),
                      "keys": sorted(summary)}, sort_keys=True))
    return EXIT_OK


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emosura",
        description="Atomic decompose-verify-match evaluation for emotional "
                    "speech captions.",
    )
    parser.add_argument("--log-level", default="warn",
                        choices=["error", "warn", "info", "debug"],
                        help="stderr JSONL log level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curate", help="filter and stratify a benchmark manifest")
    p.add_argument("manifest", help="input manifest JSONL")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cap", type=int, default=curate_mod.DEFAULT_BIN_CAP,
                   help="max samples per valence-arousal grid cell")
    p.add_argument("--audio-root", default=None,
                   help="verify audio files exist under this root")
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("score", help="run the full evaluation pipeline")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output directory for reports")
    _add_backend_flags(p)
    _add_common_eval_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("decompose", help="decompose captions into atomic units")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output JSONL of unit sets")
    _add_backend_flags(p)
    _add_common_eval_flags(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("verify", help="verify generated units against audio")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output JSONL of verdicts")
    _add_backend_flags(p)
    _add_common_eval_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("match", help="match generated units to reference units")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output JSONL of match results")
    _add_backend_flags(p)
    _add_common_eval_flags(p)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("perturb", help="inject controlled caption hallucinations")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output sabotaged manifest JSONL")
    p.add_argument("--types", default="A,B,C,D",
                   help="comma-separated perturbation types (A,B,C,D)")
    p.add_argument("--per-type", type=int, default=5,
                   help="samples to perturb per type")
    p.add_argument("--lexicon-dir", default=None,
                   help="directory of substitution TSVs (default: bundled)")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("correlate", help="join scores with a MOS file and summarize")
    p.add_argument("scores", help="scores.csv from a scoring run")
    p.add_argument("mos", help="CSV with sample_id[,system_id],mos columns")
    p.add_argument("--out", required=True, help="output summary.json path")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("report", help="re-render reports from a scores.csv")
    p.add_argument("scores", help="scores.csv from a scoring run")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.log_level)
    try:
        return args.func(args)
    except (ConfigError, JoinMismatch, MissingFixture) as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (OSError, ValueError, BackendError) as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
