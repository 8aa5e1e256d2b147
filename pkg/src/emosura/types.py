"""Domain types shared across the evaluation pipeline.

Everything here is an immutable value object; pipeline stages produce new
values instead of mutating. All types round-trip through ``to_dict`` /
``from_dict`` so cache records and manifests can replay runs byte-identically.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

# Attribute schema of the decomposition prompt. ``EXTENDED_ATTRIBUTES`` can be
# enabled by config for captions describing singing/sobbing/texture content
# that the base schema cannot house.
BASE_ATTRIBUTES = ("pitch", "rate", "volume", "gender", "emotion")
EXTENDED_ATTRIBUTES = ("vocal_event", "texture", "tempo_dynamics")

PITCH_VALUES = ("low", "normal", "high")
RATE_VALUES = ("slow", "normal", "fast")
VOLUME_VALUES = ("quiet", "normal", "loud")
GENDER_VALUES = ("male", "female")

# Attributes that count toward the descriptive-richness score. Gender is
# demographic identity, not descriptive richness, so it is excluded by
# default; callers may override.
DEFAULT_DESCRIPTIVE_ATTRIBUTES = frozenset({"pitch", "rate", "volume", "emotion"})

GENERATED = "generated"
REFERENCE = "reference"

_MULTI_SENTENCE = re.compile(r"[.!?]\s+\S")


def is_single_sentence(text: str) -> bool:
    """True if ``text`` has no sentence terminator followed by more text."""
    return not _MULTI_SENTENCE.search(text.strip())


@dataclass(frozen=True)
class APU:
    """One atomic perceptual unit: a standalone declarative fact about the voice."""

    fact: str
    attribute: str
    value: str
    evidence: str
    identifier: str
    origin: str = GENERATED

    def to_dict(self) -> dict:
        return {
            "fact": self.fact,
            "attribute": self.attribute,
            "value": self.value,
            "evidence": self.evidence,
            "identifier": self.identifier,
            "origin": self.origin,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "APU":
        return cls(
            fact=d["fact"],
            attribute=d["attribute"],
            value=d["value"],
            evidence=d.get("evidence", ""),
            identifier=d["identifier"],
            origin=d.get("origin", GENERATED),
        )


@dataclass(frozen=True)
class APUSet:
    """Ordered units extracted from one caption.

    ``format_failed`` marks captions whose decomposition produced no parseable
    JSON array; such sets are empty by construction and score zero.
    """

    caption_id: str
    origin: str
    units: tuple[APU, ...] = ()
    format_failed: bool = False

    def __post_init__(self):
        if self.format_failed and self.units:
            raise ValueError("format_failed sets must be empty")
        ids = [u.identifier for u in self.units]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate unit identifiers: {ids}")

    def __len__(self) -> int:
        return len(self.units)

    def ids(self) -> tuple[str, ...]:
        return tuple(u.identifier for u in self.units)

    def by_id(self, identifier: str) -> APU:
        for u in self.units:
            if u.identifier == identifier:
                return u
        raise KeyError(identifier)

    def to_dict(self) -> dict:
        return {
            "caption_id": self.caption_id,
            "origin": self.origin,
            "units": [u.to_dict() for u in self.units],
            "format_failed": self.format_failed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "APUSet":
        return cls(
            caption_id=d["caption_id"],
            origin=d["origin"],
            units=tuple(APU.from_dict(u) for u in d.get("units", [])),
            format_failed=bool(d.get("format_failed", False)),
        )


# Verdict decisions. Format failures are scored as "No" (conservative) but
# tallied separately for the failure-rate statistic.
YES = "Yes"
NO = "No"
FORMAT_FAILURE = "FormatFailure"


@dataclass(frozen=True)
class Verdict:
    """Audio-grounded binary judgment for one APU."""

    apu_id: str
    decision: str
    raw_response: str = ""

    def __post_init__(self):
        if self.decision not in (YES, NO, FORMAT_FAILURE):
            raise ValueError(f"bad decision: {self.decision!r}")

    def to_dict(self) -> dict:
        return {"apu_id": self.apu_id, "decision": self.decision, "raw_response": self.raw_response}

    @classmethod
    def from_dict(cls, d: dict) -> "Verdict":
        return cls(apu_id=d["apu_id"], decision=d["decision"], raw_response=d.get("raw_response", ""))


@dataclass(frozen=True)
class VerificationResult:
    """All verdicts for one generated APU set."""

    apu_set_ref: str
    verdicts: tuple[Verdict, ...]

    @property
    def verified_ids(self) -> frozenset[str]:
        return frozenset(v.apu_id for v in self.verdicts if v.decision == YES)

    @property
    def failure_count(self) -> int:
        return sum(1 for v in self.verdicts if v.decision == FORMAT_FAILURE)

    def to_dict(self) -> dict:
        return {
            "apu_set_ref": self.apu_set_ref,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationResult":
        return cls(
            apu_set_ref=d["apu_set_ref"],
            verdicts=tuple(Verdict.from_dict(v) for v in d.get("verdicts", [])),
        )


@dataclass(frozen=True)
class MatchResult:
    """Alignment of generated units to reference units.

    ``matched_oracle_ids`` is the set of distinct reference units hit by at
    least one generated unit; ``extra_verified_ids`` are verified generated
    units with no match (correct but non-reference content).
    """

    pairs: tuple[tuple[str, str | None], ...]
    matched_oracle_ids: frozenset[str]
    extra_verified_ids: frozenset[str]
    format_failed: bool = False

    def to_dict(self) -> dict:
        return {
            "pairs": [[g, m] for g, m in self.pairs],
            "matched_oracle_ids": sorted(self.matched_oracle_ids),
            "extra_verified_ids": sorted(self.extra_verified_ids),
            "format_failed": self.format_failed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MatchResult":
        return cls(
            pairs=tuple((g, m) for g, m in d.get("pairs", [])),
            matched_oracle_ids=frozenset(d.get("matched_oracle_ids", [])),
            extra_verified_ids=frozenset(d.get("extra_verified_ids", [])),
            format_failed=bool(d.get("format_failed", False)),
        )


SCOPE_ALL = "all"
SCOPE_DESCRIPTIVE = "descriptive"


@dataclass(frozen=True)
class ScoreBreakdown:
    """Precision / recall / F1 for one caption over one APU population."""

    precision: float
    recall: float
    f_score: float
    scope: str = SCOPE_ALL

    def to_dict(self) -> dict:
        return {
            "s_p": self.precision,
            "s_r": self.recall,
            "s_f": self.f_score,
            "scope": self.scope,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreBreakdown":
        return cls(
            precision=d["s_p"], recall=d["s_r"], f_score=d["s_f"],
            scope=d.get("scope", SCOPE_ALL),
        )


@dataclass(frozen=True)
class CaptionScore:
    """Final score for one caption: all-unit and descriptive-only breakdowns."""

    caption_id: str
    all_units: ScoreBreakdown
    descriptive: ScoreBreakdown
    final: float

    def to_dict(self) -> dict:
        return {
            "caption_id": self.caption_id,
            "all": self.all_units.to_dict(),
            "descriptive": self.descriptive.to_dict(),
            "final": self.final,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CaptionScore":
        return cls(
            caption_id=d["caption_id"],
            all_units=ScoreBreakdown.from_dict(d["all"]),
            descriptive=ScoreBreakdown.from_dict(d["descriptive"]),
            final=d["final"],
        )


@dataclass(frozen=True)
class AudioRef:
    """Pointer to one audio clip; the digest keys caches, not the path."""

    sample_id: str
    path: str
    duration_s: float
    content_digest: str = ""

    @staticmethod
    def digest_bytes(data: bytes) -> str:
        return hashlib.sha256(data).hexdigest()


@dataclass
class SampleRecord:
    """One benchmark utterance with annotations and captions."""

    sample_id: str
    audio_path: str
    duration_s: float
    valence_mean: float
    valence_std: float | None
    arousal_mean: float
    arousal_std: float | None
    dominance_mean: float
    reference_caption: str
    generated_captions: dict[str, str] = field(default_factory=dict)
    human_mos: list[int] | None = None
    perturbation: dict | None = None

    def mos_mean(self) -> float | None:
        if not self.human_mos:
            return None
        return sum(self.human_mos) / len(self.human_mos)


@dataclass(frozen=True)
class AcousticFeatures:
    """Frame-level paralinguistic summary of one clip.

    ``voiced`` is False when no frame passed the voicing threshold; pitch,
    jitter and shimmer fields are 0.0 in that case and renderers show the
    pitch row as "unvoiced".
    """

    pitch_median_hz: float
    pitch_std_hz: float
    loudness_dbfs: float
    jitter_pct: float
    shimmer_pct: float
    tempo_peaks_per_s: float
    voiced: bool = True

    def to_dict(self) -> dict:
        return {
            "pitch_median_hz": self.pitch_median_hz,
            "pitch_std_hz": self.pitch_std_hz,
            "loudness_dbfs": self.loudness_dbfs,
            "jitter_pct": self.jitter_pct,
            "shimmer_pct": self.shimmer_pct,
            "tempo_peaks_per_s": self.tempo_peaks_per_s,
            "voiced": self.voiced,
        }


# Perturbation type tags (see bench.perturb).
TYPE_A_EMOTION_FLIP = "A"
TYPE_B_ATTRIBUTE_SWAP = "B"
TYPE_C_EVENT_FABRICATION = "C"
TYPE_D_MIXED = "D"
PERTURBATION_TYPES = (
    TYPE_A_EMOTION_FLIP,
    TYPE_B_ATTRIBUTE_SWAP,
    TYPE_C_EVENT_FABRICATION,
    TYPE_D_MIXED,
)


@dataclass(frozen=True)
class Substitution:
    """One recorded span replacement; offsets allow byte-exact inversion."""

    original_start: int
    result_start: int
    original_text: str
    replacement_text: str
    attribute: str

    def to_dict(self) -> dict:
        return {
            "original_start": self.original_start,
            "result_start": self.result_start,
            "original_text": self.original_text,
            "replacement_text": self.replacement_text,
            "attribute": self.attribute,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Substitution":
        return cls(
            original_start=d["original_start"],
            result_start=d["result_start"],
            original_text=d["original_text"],
            replacement_text=d["replacement_text"],
            attribute=d["attribute"],
        )


@dataclass(frozen=True)
class PerturbationSpec:
    """Audit record of one caption sabotage."""

    type: str
    substitutions: tuple[Substitution, ...]
    target_attribute: str
    affected_apu_ids: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "type": self.type,
            "substitutions": [s.to_dict() for s in self.substitutions],
            "target_attribute": self.target_attribute,
            "affected_apu_ids": list(self.affected_apu_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PerturbationSpec":
        return cls(
            type=d["type"],
            substitutions=tuple(Substitution.from_dict(s) for s in d.get("substitutions", [])),
            target_attribute=d.get("target_attribute", ""),
            affected_apu_ids=tuple(d.get("affected_apu_ids", [])),
        )
