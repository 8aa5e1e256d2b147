"""JSONL manifest I/O for benchmark sample records."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .types import SampleRecord


def _stat_pair(value) -> tuple[float, float | None]:
    """Accept {"mean": x, "std": y}, [x, y], or a bare mean."""
    if isinstance(value, dict):
        return float(value["mean"]), (float(value["std"]) if "std" in value else None)
    if isinstance(value, (list, tuple)):
        mean = float(value[0])
        std = float(value[1]) if len(value) > 1 else None
        return mean, std
    return float(value), None


def record_from_dict(d: dict) -> SampleRecord:
    valence_mean, valence_std = _stat_pair(d["valence"])
    arousal_mean, arousal_std = _stat_pair(d["arousal"])
    dominance_mean, _ = _stat_pair(d.get("dominance", 0.0))
    return SampleRecord(
        sample_id=str(d["sample_id"]),
        audio_path=str(d.get("audio", "")),
        duration_s=float(d.get("duration_s", 0.0)),
        valence_mean=valence_mean,
        valence_std=valence_std,
        arousal_mean=arousal_mean,
        arousal_std=arousal_std,
        dominance_mean=dominance_mean,
        reference_caption=str(d.get("reference_caption", "")),
        generated_captions=dict(d.get("generated_captions", {})),
        human_mos=list(d["human_mos"]) if d.get("human_mos") is not None else None,
        perturbation=d.get("perturbation"),
    )


def record_to_dict(r: SampleRecord) -> dict:
    d = {
        "sample_id": r.sample_id,
        "audio": r.audio_path,
        "duration_s": r.duration_s,
        "valence": {"mean": r.valence_mean, "std": r.valence_std},
        "arousal": {"mean": r.arousal_mean, "std": r.arousal_std},
        "dominance": {"mean": r.dominance_mean},
        "reference_caption": r.reference_caption,
        "generated_captions": r.generated_captions,
    }
    if r.human_mos is not None:
        d["human_mos"] = r.human_mos
    if r.perturbation is not None:
        d["perturbation"] = r.perturbation
    return d


def read_manifest(path: str | Path) -> list[SampleRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{i}: bad manifest record: {exc}") from exc
    return records


def write_manifest(path: str | Path, records: list[SampleRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(record_to_dict(r), ensure_ascii=False, sort_keys=True) + "\n")


def manifest_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
