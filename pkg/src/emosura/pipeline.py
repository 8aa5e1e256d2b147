"""End-to-end evaluation runs: decompose, verify, match, score, report.

One sample/system pair flows through the three stages and lands in a status:
``scored`` on success, ``format_failed`` when either caption decomposes to
nothing verifiable (such captions earn zero), ``errored`` on transport
failure (the run continues and the exit code reflects it). Assembly is
deterministic regardless of worker scheduling.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import baselines
from .backends import DEFAULT_AUDIO_MODEL, DEFAULT_TEXT_MODEL
from .decompose import decompose_caption
from .errors import BackendError, MissingFixture
from .matching import match_apus
from .scoring import score_caption
from .types import (
    APUSet,
    AudioRef,
    CaptionScore,
    DEFAULT_DESCRIPTIVE_ATTRIBUTES,
    GENERATED,
    MatchResult,
    REFERENCE,
    SampleRecord,
    VerificationResult,
)
from .verify import format_failure_rate, verify_apus

STATUS_SCORED = "scored"
STATUS_FORMAT_FAILED = "format_failed"
STATUS_ERRORED = "errored"


@dataclass(frozen=True)
class EvalConfig:
    text_model: str = DEFAULT_TEXT_MODEL
    audio_model: str = DEFAULT_AUDIO_MODEL
    descriptive_attributes: frozenset = DEFAULT_DESCRIPTIVE_ATTRIBUTES
    extended_attributes: bool = False
    use_gt_context: bool = True
    max_inflight: int = 8
    jobs: int = 1

    def digest(self) -> str:
        payload = {
            "text_model": self.text_model,
            "audio_model": self.audio_model,
            "descriptive_attributes": sorted(self.descriptive_attributes),
            "extended_attributes": self.extended_attributes,
            "use_gt_context": self.use_gt_context,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class SampleOutcome:
    sample_id: str
    system_id: str
    status: str
    score: CaptionScore | None = None
    generated: APUSet | None = None
    reference: APUSet | None = None
    verification: VerificationResult | None = None
    match: MatchResult | None = None
    error: str = ""
    format_failed_side: str = ""


def evaluate_sample(
    record: SampleRecord,
    system_id: str,
    text_backend,
    audio_backend,
    config: EvalConfig,
    cache=None,
    audio_root: str | Path = ".",
) -> SampleOutcome:
    """Score one generated caption of one sample against its reference."""
    caption = record.generated_captions[system_id]
    sample_id = record.sample_id
    try:
        reference = decompose_caption(
            f"{sample_id}::ref", record.reference_caption, text_backend,
            origin=REFERENCE, model_id=config.text_model, cache=cache,
            extended_attributes=config.extended_attributes,
        )
        generated = decompose_caption(
            f"{sample_id}::{system_id}", caption, text_backend,
            origin=GENERATED, model_id=config.text_model, cache=cache,
            extended_attributes=config.extended_attributes,
        )
    except MissingFixture:
        raise
    except BackendError as exc:
        return SampleOutcome(sample_id, system_id, STATUS_ERRORED, error=str(exc))

    if not generated.units or not reference.units:
        side = "generated" if not generated.units else "reference"
        empty_verification = VerificationResult(apu_set_ref=generated.caption_id, verdicts=())
        empty_match = MatchResult(pairs=tuple((g, None) for g in generated.ids()),
                                  matched_oracle_ids=frozenset(),
                                  extra_verified_ids=frozenset())
        score = score_caption(generated, reference, empty_verification, empty_match,
                              descriptive_attributes=config.descriptive_attributes)
        return SampleOutcome(
            sample_id, system_id, STATUS_FORMAT_FAILED,
            score=score, generated=generated, reference=reference,
            verification=empty_verification, match=empty_match,
            format_failed_side=side,
        )

    audio_path = Path(audio_root) / record.audio_path
    try:
        audio_bytes = audio_path.read_bytes()
    except OSError as exc:
        return SampleOutcome(sample_id, system_id, STATUS_ERRORED,
                             generated=generated, reference=reference,
                             error=f"cannot read audio: {exc}")
    audio = AudioRef(
        sample_id=sample_id,
        path=str(audio_path),
        duration_s=record.duration_s,
        content_digest=AudioRef.digest_bytes(audio_bytes),
    )
    gt_context = record.reference_caption if config.use_gt_context else ""
    verification = verify_apus(
        generated, audio, gt_context, audio_backend,
        model_id=config.audio_model, max_inflight=config.max_inflight,
        audio_bytes=audio_bytes, cache=cache,
    )
    try:
        match = match_apus(generated, reference, verification, text_backend,
                           model_id=config.text_model, cache=cache)
    except MissingFixture:
        raise
    except BackendError as exc:
        return SampleOutcome(sample_id, system_id, STATUS_ERRORED,
                             generated=generated, reference=reference,
                             verification=verification, error=str(exc))
    score = score_caption(generated, reference, verification, match,
                          descriptive_attributes=config.descriptive_attributes)
    return SampleOutcome(
        sample_id, system_id, STATUS_SCORED,
        score=score, generated=generated, reference=reference,
        verification=verification, match=match,
    )


@dataclass
class RunResult:
    manifest: dict
    rows: list[dict]
    outcomes: list[SampleOutcome] = field(default_factory=list)

    @property
    def has_errors(self) -> bool:
        return any(o.status == STATUS_ERRORED for o in self.outcomes)


def _baseline_columns(records: list[SampleRecord], pairs: list[tuple[str, str]]) -> dict:
    """BLEU-4 / ROUGE-L / CIDEr-D per (sample_id, system_id) pair.

    CIDEr-D is corpus-level per system; with fewer than two samples for a
    system it is undefined and reported as None.
    """
    by_id = {r.sample_id: r for r in records}
    out: dict[tuple[str, str], dict] = {}
    by_system: dict[str, list[tuple[str, str]]] = {}
    for sample_id, system_id in pairs:
        by_system.setdefault(system_id, []).append((sample_id, system_id))
    for system_id, system_pairs in by_system.items():
        items = []
        for sample_id, _sys in system_pairs:
            record = by_id[sample_id]
            cand = baselines.tokenize(record.generated_captions[system_id])
            ref = baselines.tokenize(record.reference_caption)
            items.append((cand, [ref]))
        cider_scores: list[float | None]
        if len(items) >= 2 and all(c for c, _r in items):
            cider_scores = list(baselines.cider_d(items))
        else:
            cider_scores = [None] * len(items)
        for (sample_id, _sys), (cand, refs), cider in zip(system_pairs, items, cider_scores):
            cell: dict = {"cider_d": cider}
            if cand and refs[0]:
                cell["bleu4"] = baselines.bleu4(cand, refs)
                cell["rouge_l"] = baselines.rouge_l(cand, refs[0])
            else:
                cell["bleu4"] = None
                cell["rouge_l"] = None
            out[(sample_id, system_id)] = cell
    return out


def run_scoring(
    records: list[SampleRecord],
    text_backend,
    audio_backend,
    config: EvalConfig,
    cache=None,
    audio_root: str | Path = ".",
    input_digest: str = "",
) -> RunResult:
    """Evaluate every (sample, system) pair and assemble rows plus manifest."""
    started = time.time()
    pairs = [
        (record.sample_id, system_id)
        for record in sorted(records, key=lambda r: r.sample_id)
        for system_id in sorted(record.generated_captions)
    ]
    by_id = {r.sample_id: r for r in records}

    def work(pair: tuple[str, str]) -> SampleOutcome:
        sample_id, system_id = pair
        return evaluate_sample(by_id[sample_id], system_id, text_backend,
                               audio_backend, config, cache=cache, audio_root=audio_root)

    if config.jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(work, pairs))
    else:
        outcomes = [work(p) for p in pairs]

    baseline_cells = _baseline_columns(records, pairs)
    rows = []
    all_verdicts = []
    for outcome in outcomes:
        record = by_id[outcome.sample_id]
        cell = baseline_cells.get((outcome.sample_id, outcome.system_id), {})
        score = outcome.score
        row = {
            "sample_id": outcome.sample_id,
            "system_id": outcome.system_id,
            "status": outcome.status,
            "s_p": score.all_units.precision if score else None,
            "s_r": score.all_units.recall if score else None,
            "s_f": score.all_units.f_score if score else None,
            "s_f_prime": score.descriptive.f_score if score else None,
            "final": score.final if score else None,
            "bleu4": cell.get("bleu4"),
            "rouge_l": cell.get("rouge_l"),
            "cider_d": cell.get("cider_d"),
            "mos_mean": record.mos_mean(),
            "caption_text": record.generated_captions[outcome.system_id],
        }
        rows.append(row)
        if outcome.verification is not None:
            all_verdicts.extend(outcome.verification.verdicts)

    config_digest = config.digest()
    run_id = hashlib.sha256(f"{config_digest}:{input_digest}".encode()).hexdigest()[:16]
    manifest = {
        "run_id": run_id,
        "config_digest": config_digest,
        "backends": {
            "text_model": config.text_model,
            "audio_model": config.audio_model,
            "text_backend": type(text_backend).__name__,
            "audio_backend": type(audio_backend).__name__,
        },
        "input_digest": input_digest,
        "samples": [
            {
                "sample_id": o.sample_id,
                "system_id": o.system_id,
                "status": o.status,
                "score": o.score.to_dict() if o.score else None,
                "error": o.error,
            }
            for o in outcomes
        ],
        "verify_format_failure_rate": format_failure_rate(all_verdicts),
        "decompose_format_failures": sum(
            1 for o in outcomes if o.status == STATUS_FORMAT_FAILED
        ),
        "cache_digests": cache.file_digests() if cache is not None else {},
        "timing": {"started": started, "finished": time.time()},
    }
    return RunResult(manifest=manifest, rows=rows, outcomes=outcomes)


def write_run_manifest(result: RunResult, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    finished = time.time()
    result.manifest["timing"]["finished"] = finished
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.manifest, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")
