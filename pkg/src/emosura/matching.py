"""Semantic alignment of generated units to reference units.

Matching is one set-to-set backend call per caption pair. The response is a
JSON list assigning each generated unit at most one oracle id; distinct
matched oracle ids form the coverage set, and verified-but-unmatched generated
units form the extra set that widens the recall denominator.
"""

from __future__ import annotations

import json
import logging

from .backends import Backend, ChatRequest, text_message
from .decompose import recover_json_list
from .scoring import score_caption
from .types import APUSet, CaptionScore, MatchResult, VerificationResult

logger = logging.getLogger(__name__)

_PROMPT_TEMPLATE = """You are now a audio-linguistic expert in matching two set of primitive information units generated from two captions.

The set of primitive information units is represented as a list of dict [{{"fact": [UNIT], "identifier": [ID]}}...] within JSON format. In addition, each primitive information unit in the oracle set would be accompanied with a unique "id".

To match primitive information units, consider each unit in the candidate set individually and decide whether its meaning is semantically entailed by, or equivalent to, exactly one unit in the oracle set. Paraphrases and synonyms count as matches; contradictions and unrelated statements do not.

IMPORTANT: Please consider each primitive information unit in the set individually. You should only output the matching results formatted as:
[{{"fact": [UNIT], "identifier": [ID], "matched_oracle_id": [ORACLE ID]}}...]

The "identifier" is optional. For key named "matched_oracle_id", the value should be the corresponding "id". If not matched, set "matched_oracle_id" to "None".

> > > Oracle Set: {oracle_json}
> > > Set of Primitive information units: {candidate_json}"""


def build_matching_prompt(generated: APUSet, reference: APUSet) -> str:
    """Render the set-to-set matching prompt, preserving unit order."""
    oracle_json = json.dumps(
        [{"fact": u.fact, "id": u.identifier} for u in reference.units],
        ensure_ascii=False,
    )
    candidate_json = json.dumps(
        [{"fact": u.fact, "identifier": u.identifier} for u in generated.units],
        ensure_ascii=False,
    )
    return _PROMPT_TEMPLATE.format(oracle_json=oracle_json, candidate_json=candidate_json)


def parse_match_response(
    raw: str,
    generated_ids,
    oracle_ids,
) -> tuple[tuple[tuple[str, str | None], ...], bool]:
    """Parse the matching response into ordered (generated_id, oracle_id|None) pairs.

    Never raises. Entries with unknown generated identifiers are dropped with
    a log; oracle ids outside the known set are coerced to None; generated ids
    absent from the response come back unmatched. A full parse failure returns
    every unit unmatched and flags ``format_failed``.
    """
    generated_ids = list(generated_ids)
    oracle_set = set(oracle_ids)
    assigned: dict[str, str | None] = {}

    data = recover_json_list(raw)
    format_failed = data is None

    if isinstance(data, list):
        known = set(generated_ids)
        for obj in data:
            if not isinstance(obj, dict):
                logger.debug("dropped match entry (not an object): %r", obj)
                continue
            gid = obj.get("identifier")
            if gid not in known:
                logger.debug("dropped match entry (unknown identifier): %r", gid)
                continue
            target = obj.get("matched_oracle_id")
            if not isinstance(target, str) or target.strip().lower() in ("", "none", "null"):
                target = None
            elif target not in oracle_set:
                logger.debug("coerced out-of-domain oracle id to None: %r", target)
                target = None
            assigned[gid] = target

    pairs = tuple((gid, assigned.get(gid)) for gid in generated_ids)
    return pairs, format_failed


def compute_match_sets(
    pairs,
    verification: VerificationResult,
    reference: APUSet,
    format_failed: bool = False,
) -> MatchResult:
    """Derive the matched-reference and extra sets from raw pairs.

    Distinct oracle targets count once even when several generated units hit
    the same reference unit. The extra set is the verified generated units
    that matched nothing; a matched-but-unverified unit still contributes its
    match (the precision side already penalizes the failed verification).
    """
    pairs = tuple(pairs)
    oracle_ids = set(reference.ids())
    matched_oracle = frozenset(m for _g, m in pairs if m is not None and m in oracle_ids)
    matched_generated = {g for g, m in pairs if m is not None}
    extra = frozenset(verification.verified_ids - matched_generated)
    return MatchResult(
        pairs=pairs,
        matched_oracle_ids=matched_oracle,
        extra_verified_ids=extra,
        format_failed=format_failed,
    )


def match_apus(
    generated: APUSet,
    reference: APUSet,
    verification: VerificationResult,
    backend: Backend,
    model_id: str = "Qwen2.5-7B-Instruct",
    cache=None,
) -> MatchResult:
    """Run the matching call for one caption pair and assemble the result.

    Empty generated or reference sets skip the backend entirely: with nothing
    to align, every unit is unmatched and only the extra set can be non-empty.
    """
    if not generated.units or not reference.units:
        pairs = tuple((g, None) for g in generated.ids())
        return compute_match_sets(pairs, verification, reference)

    prompt = build_matching_prompt(generated, reference)
    request = ChatRequest(
        model_id=model_id,
        messages=(text_message(prompt),),
        max_tokens=2048,
        meta={"kind": "match", "caption_id": generated.caption_id},
    )
    key = request.digest()
    raw = None
    if cache is not None:
        hit = cache.get("match", key)
        if hit is not None:
            raw = hit["raw_response"]
    cache_miss = raw is None
    if raw is None:
        raw = backend.complete(request)
    pairs, format_failed = parse_match_response(raw, generated.ids(), reference.ids())
    if cache is not None and cache_miss:
        cache.put("match", key, {
            "kind": "match",
            "caption_id": generated.caption_id,
            "model_id": model_id,
            "prompt_sha256": request.prompt_sha256(),
            "raw_response": raw,
            "pairs": [[g, m] for g, m in pairs],
        })
    return compute_match_sets(pairs, verification, reference, format_failed=format_failed)


def match_and_score(
    generated: APUSet,
    reference: APUSet,
    verification: VerificationResult,
    backend: Backend,
    model_id: str = "Qwen2.5-7B-Instruct",
    cache=None,
    descriptive_attributes=None,
) -> tuple[MatchResult, CaptionScore]:
    """Match one caption pair and score it in both scopes."""
    match = match_apus(generated, reference, verification, backend,
                       model_id=model_id, cache=cache)
    score = score_caption(generated, reference, verification, match,
                          descriptive_attributes=descriptive_attributes)
    return match, score
