"""Controlled caption sabotage for hallucination-detection testing.

Substitutions are lexicon-driven (editable TSV files: match-term, replacement,
affected attribute). Type A flips emotion-polarity terms; Type B swaps gender
terms together with the correlated pitch/texture descriptors so the result
stays internally coherent; Type C replaces speech-act verbs with stylized
vocal events; Type D composes all of them. Every replacement is recorded with
offsets, so a perturbation is invertible byte-exactly from its span list.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

from ..errors import NoSubstitutableSpan
from ..types import (
    APUSet,
    PERTURBATION_TYPES,
    PerturbationSpec,
    Substitution,
    TYPE_A_EMOTION_FLIP,
    TYPE_B_ATTRIBUTE_SWAP,
    TYPE_C_EVENT_FABRICATION,
    TYPE_D_MIXED,
)

# Lexicon files and the attribute rows each type draws from.
_TYPE_SOURCES: dict[str, tuple[tuple[str, frozenset | None], ...]] = {
    TYPE_A_EMOTION_FLIP: (("emotion", None),),
    TYPE_B_ATTRIBUTE_SWAP: (("gender", None), ("acoustic", frozenset({"pitch", "texture"}))),
    TYPE_C_EVENT_FABRICATION: (("event", None),),
    TYPE_D_MIXED: (("gender", None), ("acoustic", None), ("emotion", None), ("event", None)),
}

# Attribute categories each type is allowed to touch (audit contract).
TYPE_ATTRIBUTES: dict[str, frozenset] = {
    TYPE_A_EMOTION_FLIP: frozenset({"emotion"}),
    TYPE_B_ATTRIBUTE_SWAP: frozenset({"gender", "pitch", "texture"}),
    TYPE_C_EVENT_FABRICATION: frozenset({"vocal_event", "texture"}),
    TYPE_D_MIXED: frozenset(
        {"gender", "pitch", "texture", "emotion", "vocal_event", "volume", "rate"}
    ),
}

TYPE_TARGET_ATTRIBUTE = {
    TYPE_A_EMOTION_FLIP: "emotion",
    TYPE_B_ATTRIBUTE_SWAP: "gender",
    TYPE_C_EVENT_FABRICATION: "vocal_event",
    TYPE_D_MIXED: "mixed",
}


class Lexicon:
    """Ordered substitution entries; first entry wins on duplicate terms."""

    def __init__(self, entries: list[tuple[str, str, str]]):
        seen = set()
        self.entries = []
        for match, replacement, attribute in entries:
            key = match.lower()
            if key in seen:
                continue
            seen.add(key)
            self.entries.append((match, replacement, attribute))
        terms = sorted((m for m, _r, _a in self.entries), key=len, reverse=True)
        self._pattern = re.compile(
            r"\b(" + "|".join(re.escape(t) for t in terms) + r")\b", re.IGNORECASE
        ) if terms else None
        self._by_term = {m.lower(): (r, a) for m, r, a in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def find(self, text: str):
        """Non-overlapping leftmost-longest matches: (start, matched, repl, attr)."""
        if self._pattern is None:
            return
        for m in self._pattern.finditer(text):
            replacement, attribute = self._by_term[m.group(0).lower()]
            yield m.start(), m.group(0), replacement, attribute


def parse_lexicon_tsv(text: str, attribute_filter: frozenset | None = None) -> list[tuple[str, str, str]]:
    entries = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"bad lexicon row (need 3 tab-separated columns): {line!r}")
        match, replacement, attribute = (p.strip() for p in parts)
        if attribute_filter is not None and attribute not in attribute_filter:
            continue
        entries.append((match, replacement, attribute))
    return entries


def _read_lexicon_file(name: str, lexicon_dir: str | Path | None) -> str:
    if lexicon_dir is not None:
        return (Path(lexicon_dir) / f"{name}.tsv").read_text(encoding="utf-8")
    return resources.files("emosura.bench").joinpath(f"lexicon/{name}.tsv").read_text(
        encoding="utf-8"
    )


def load_default_lexicon(perturbation_type: str, lexicon_dir: str | Path | None = None) -> Lexicon:
    """Assemble the lexicon for one perturbation type from its TSV sources."""
    if perturbation_type not in PERTURBATION_TYPES:
        raise ValueError(f"unknown perturbation type {perturbation_type!r}")
    entries: list[tuple[str, str, str]] = []
    for name, attribute_filter in _TYPE_SOURCES[perturbation_type]:
        entries.extend(
            parse_lexicon_tsv(_read_lexicon_file(name, lexicon_dir), attribute_filter)
        )
    return Lexicon(entries)


def _match_case(original: str, replacement: str) -> str:
    if original[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement


def perturb(
    reference_caption: str,
    apus: APUSet | None,
    perturbation_type: str,
    lexicon: Lexicon | None = None,
    lexicon_dir: str | Path | None = None,
) -> tuple[str, PerturbationSpec]:
    """Sabotage one caption; returns the new text plus an auditable span list.

    Raises NoSubstitutableSpan when the caption contains nothing the type's
    lexicon can alter. When ``apus`` is given, units whose evidence overlaps a
    replaced span are recorded as affected for downstream audits.
    """
    if lexicon is None:
        lexicon = load_default_lexicon(perturbation_type, lexicon_dir)
    pieces: list[str] = []
    substitutions: list[Substitution] = []
    pos = 0
    out_len = 0
    for start, matched, replacement, attribute in lexicon.find(reference_caption):
        replacement = _match_case(matched, replacement)
        pieces.append(reference_caption[pos:start])
        out_len += start - pos
        substitutions.append(
            Substitution(
                original_start=start,
                result_start=out_len,
                original_text=matched,
                replacement_text=replacement,
                attribute=attribute,
            )
        )
        pieces.append(replacement)
        out_len += len(replacement)
        pos = start + len(matched)
    pieces.append(reference_caption[pos:])
    if not substitutions:
        raise NoSubstitutableSpan(
            f"type {perturbation_type} found nothing to alter in caption"
        )
    sabotaged = "".join(pieces)

    affected: list[str] = []
    if apus is not None:
        lowered = [s.original_text.lower() for s in substitutions]
        for unit in apus.units:
            ev = unit.evidence.lower()
            if ev and any(ev in t or t in ev for t in lowered):
                affected.append(unit.identifier)

    spec = PerturbationSpec(
        type=perturbation_type,
        substitutions=tuple(substitutions),
        target_attribute=TYPE_TARGET_ATTRIBUTE[perturbation_type],
        affected_apu_ids=tuple(affected),
    )
    return sabotaged, spec


def invert(sabotaged_caption: str, spec: PerturbationSpec) -> str:
    """Recover the original caption byte-exactly from the recorded spans."""
    out: list[str] = []
    pos = 0
    for sub in sorted(spec.substitutions, key=lambda s: s.result_start):
        end = sub.result_start + len(sub.replacement_text)
        actual = sabotaged_caption[sub.result_start:end]
        if actual != sub.replacement_text:
            raise ValueError(
                f"span mismatch at {sub.result_start}: {actual!r} != {sub.replacement_text!r}"
            )
        out.append(sabotaged_caption[pos:sub.result_start])
        out.append(sub.original_text)
        pos = end
    out.append(sabotaged_caption[pos:])
    return "".join(out)


def detection_rate(evaluations, include_types=()) -> dict[str, dict]:
    """Per-type injected/detected counts and percentage rate.

    ``evaluations`` is an iterable of (perturbation_type, detected) where
    detected means the sabotaged caption scored strictly below its
    ground-truth counterpart. Categories listed in ``include_types`` appear
    even with zero injections; their rate is None (rendered "n/a").
    """
    stats: dict[str, dict] = {t: {"injected": 0, "detected": 0} for t in include_types}
    for perturbation_type, detected in evaluations:
        entry = stats.setdefault(perturbation_type, {"injected": 0, "detected": 0})
        entry["injected"] += 1
        entry["detected"] += int(bool(detected))
    for entry in stats.values():
        entry["rate_pct"] = (
            100.0 * entry["detected"] / entry["injected"] if entry["injected"] else None
        )
    return stats
