"""Pure scoring engine: precision, recall, F1 and the final caption score.

All functions are total over their documented domains and safe to call
concurrently. Degenerate inputs (empty unit sets) score 0 rather than raising,
so a caption that yields no verifiable content earns no credit.
"""

from __future__ import annotations

from .types import (
    APU,
    APUSet,
    CaptionScore,
    DEFAULT_DESCRIPTIVE_ATTRIBUTES,
    MatchResult,
    SCOPE_ALL,
    SCOPE_DESCRIPTIVE,
    ScoreBreakdown,
    VerificationResult,
)


def precision_score(verified_count: int, total_units: int) -> float:
    """Fraction of generated units supported by the audio.

    Returns 0.0 for an empty unit set: a caption with nothing verifiable
    earns no factual-correctness credit.
    """
    if total_units < 0 or verified_count < 0 or verified_count > total_units:
        raise ValueError(f"inconsistent counts: {verified_count}/{total_units}")
    if total_units == 0:
        return 0.0
    return verified_count / total_units


def recall_score(matched_ref: int, ref_total: int, extra_verified: int) -> float:
    """Coverage of the reference units, crediting verified extra content.

    Computes (matched + extra) / (total references + extra); verified
    generated units that match nothing widen both numerator and denominator
    so correct non-reference detail is not penalized as a false negative.
    """
    if min(matched_ref, ref_total, extra_verified) < 0 or matched_ref > ref_total:
        raise ValueError(
            f"inconsistent counts: Q={matched_ref}, O={ref_total}, extra={extra_verified}"
        )
    denom = ref_total + extra_verified
    if denom == 0:
        return 0.0
    return (matched_ref + extra_verified) / denom


def f1(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def is_descriptive(apu: APU, descriptive_attributes=DEFAULT_DESCRIPTIVE_ATTRIBUTES) -> bool:
    """True if the unit's attribute counts toward descriptive richness."""
    return apu.attribute in descriptive_attributes


def breakdown_from_counts(
    total_generated: int,
    verified_count: int,
    ref_total: int,
    matched_ref: int,
    extra_verified: int,
    scope: str = SCOPE_ALL,
) -> ScoreBreakdown:
    """Assemble one precision/recall/F1 breakdown from raw counts."""
    p = precision_score(verified_count, total_generated)
    r = recall_score(matched_ref, ref_total, extra_verified)
    return ScoreBreakdown(precision=p, recall=r, f_score=f1(p, r), scope=scope)


def score_breakdown(
    generated: APUSet,
    reference: APUSet,
    verification: VerificationResult,
    match: MatchResult,
    descriptive_attributes=None,
    scope: str = SCOPE_ALL,
) -> ScoreBreakdown:
    """Score one caption over either all units or the descriptive subset.

    In descriptive scope, the generated/reference populations, the verified
    set, the matched reference set and the extra set are each filtered by
    attribute membership before recounting; the formulas are unchanged.
    """
    if scope == SCOPE_DESCRIPTIVE:
        attrs = descriptive_attributes
        if attrs is None:
            attrs = DEFAULT_DESCRIPTIVE_ATTRIBUTES
        gen_ids = {u.identifier for u in generated.units if u.attribute in attrs}
        ref_ids = {u.identifier for u in reference.units if u.attribute in attrs}
        verified = verification.verified_ids & gen_ids
        matched = match.matched_oracle_ids & ref_ids
        extra = match.extra_verified_ids & gen_ids
        total_gen = len(gen_ids)
        total_ref = len(ref_ids)
    else:
        verified = verification.verified_ids
        matched = match.matched_oracle_ids
        extra = match.extra_verified_ids
        total_gen = len(generated.units)
        total_ref = len(reference.units)
    return breakdown_from_counts(
        total_gen, len(verified), total_ref, len(matched), len(extra), scope=scope
    )


def emosura_final(all_units: ScoreBreakdown, descriptive: ScoreBreakdown,
                  caption_id: str = "") -> CaptionScore:
    """Combine the all-unit and descriptive-only F1 into the final score."""
    return CaptionScore(
        caption_id=caption_id,
        all_units=all_units,
        descriptive=descriptive,
        final=(all_units.f_score + descriptive.f_score) / 2.0,
    )


def score_caption(
    generated: APUSet,
    reference: APUSet,
    verification: VerificationResult,
    match: MatchResult,
    descriptive_attributes=None,
) -> CaptionScore:
    """Full scoring of one caption: both scopes plus the final mean."""
    all_b = score_breakdown(generated, reference, verification, match,
                            descriptive_attributes, scope=SCOPE_ALL)
    desc_b = score_breakdown(generated, reference, verification, match,
                             descriptive_attributes, scope=SCOPE_DESCRIPTIVE)
    return emosura_final(all_b, desc_b, caption_id=generated.caption_id)
