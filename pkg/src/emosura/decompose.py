"""Caption decomposition: prompt construction and response parsing.

The decomposition model returns a JSON array of unit objects. Real models wrap
JSON in prose or code fences, so parsing runs one recovery pass (strip fences,
take the first bracket-balanced array) before declaring format failure.
Parsing is total: every response maps to a valid set, a partially-valid set
with dropped units, or a format-failed set.
"""

from __future__ import annotations

import json
import logging
import re

from .errors import EmptyCaption
from .types import (
    APU,
    APUSet,
    BASE_ATTRIBUTES,
    EXTENDED_ATTRIBUTES,
    GENDER_VALUES,
    GENERATED,
    PITCH_VALUES,
    RATE_VALUES,
    VOLUME_VALUES,
    is_single_sentence,
)

logger = logging.getLogger(__name__)

_PROMPT_HEADER = """### Persona
You are an expert linguistic analyst. Your specialty is deconstructing descriptive text into verifiable, primitive information units that characterize vocal, speech, and emotional patterns.

### Task
Analyze the provided input text. For each vocal, speech, or emotional characteristic you identify, extract it as a primitive information unit. Your output must be a JSON list of objects, where each object represents a single, verifiable attribute found in the text.

### Rules
1. Read the input text carefully to identify keywords, phrases, and pronouns that provide direct evidence about vocal and emotional characteristics.
2. For each piece of evidence, create a corresponding JSON object in the output list.
3. The "fact" key must contain a complete, standalone sentence describing the characteristic.
4. The "evidence" key must contain the exact quote from the input text that supports the fact.
5. If no evidence is present for a particular attribute, do not create an object for it.
6. Your final output must be only the JSON list and nothing else.

### Output Schema and Allowed Terms
Each object in the JSON list must conform to the following structure:
- fact: (string) A complete sentence describing the attribute.
- attribute: (string) Must be one of: {attribute_list}.
- value: (string) The specific term for the attribute. Allowed terms are:
  - For "pitch": "low", "normal", "high".
  - For "rate": "slow", "normal", "fast".
- evidence: (string) The exact substring from the input text.

### Examples

Example 1
Input: "His voice is deep..."
Output:
[
    {{
        "fact": "The speaker's gender is male.",
        "attribute": "gender",
        "value": "male",
        "evidence": "His"
    }}
]

### Input Text
"""


def allowed_attributes(extended: bool = False) -> tuple[str, ...]:
    """Attribute vocabulary: the base five, optionally the extended tags."""
    if extended:
        return BASE_ATTRIBUTES + EXTENDED_ATTRIBUTES
    return BASE_ATTRIBUTES


def build_decomposition_prompt(caption: str, extended_attributes: bool = False) -> str:
    """Render the decomposition prompt with the caption as the input text.

    Byte-stable for identical inputs; the caption is embedded verbatim.
    """
    if not caption:
        raise EmptyCaption("caption must be non-empty")
    attrs = allowed_attributes(extended_attributes)
    attribute_list = ", ".join(f'"{a}"' for a in attrs)
    return _PROMPT_HEADER.format(attribute_list=attribute_list) + caption


def _balanced_arrays(text: str):
    """Yield bracket-balanced ``[...]`` slices, leftmost first.

    Bracket counting respects string literals and escape sequences so
    brackets inside facts do not confuse it.
    """
    start = text.find("[")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        end = None
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
            elif ch == '"':
                in_string = True
            elif ch == "[":
                depth += 1
            elif ch == "]":
                depth -= 1
                if depth == 0:
                    end = i
                    break
        if end is None:
            return
        yield text[start : end + 1]
        start = text.find("[", start + 1)


def _strip_fences(raw: str) -> str:
    # Prefer fenced content when a fence is present.
    fence = re.search(r"```(?:json)?\s*(.*?)```", raw, re.DOTALL | re.IGNORECASE)
    if fence and "[" in fence.group(1):
        return fence.group(1)
    return raw


def extract_json_array(raw: str) -> str | None:
    """Recovery pass: the first bracket-balanced array slice in ``raw``.

    Strips surrounding prose and code-fence markers; returns None when no
    balanced array exists.
    """
    for slice_ in _balanced_arrays(_strip_fences(raw)):
        return slice_
    return None


def recover_json_list(raw: str) -> list | None:
    """Parse ``raw`` as a JSON list, recovering from prose wrapping.

    Tries the whole text, then each balanced array slice in order until one
    parses as a list. Returns None when nothing does.
    """
    if not isinstance(raw, str):
        return None
    try:
        data = json.loads(raw)
        if isinstance(data, list):
            return data
    except (json.JSONDecodeError, ValueError):
        pass
    for slice_ in _balanced_arrays(_strip_fences(raw)):
        try:
            data = json.loads(slice_)
        except (json.JSONDecodeError, ValueError):
            continue
        if isinstance(data, list):
            return data
    return None


# Synonym folding applied before validating constrained values.
_VOLUME_SYNONYMS = {"soft": "quiet", "medium": "normal", "moderate": "normal"}
_GENDER_SYNONYMS = {"m": "male", "man": "male", "masculine": "male",
                    "f": "female", "woman": "female", "feminine": "female"}


def _validate_unit(obj, attrs: tuple[str, ...]) -> tuple[dict | None, str | None]:
    """Normalize one raw unit object; returns (unit_fields, drop_reason)."""
    if not isinstance(obj, dict):
        return None, "not_an_object"
    fact = obj.get("fact")
    if not isinstance(fact, str) or not fact.strip():
        return None, "empty_fact"
    fact = fact.strip()
    if not is_single_sentence(fact):
        return None, "multi_sentence_fact"
    attribute = obj.get("attribute")
    if not isinstance(attribute, str):
        return None, "missing_attribute"
    attribute = attribute.strip().lower()
    if attribute not in attrs:
        return None, f"unknown_attribute:{attribute}"
    value = obj.get("value")
    if not isinstance(value, str) or not value.strip():
        return None, "missing_value"
    value = value.strip().lower()
    if attribute == "pitch" and value not in PITCH_VALUES:
        return None, f"disallowed_pitch_value:{value}"
    if attribute == "rate" and value not in RATE_VALUES:
        return None, f"disallowed_rate_value:{value}"
    if attribute == "volume":
        value = _VOLUME_SYNONYMS.get(value, value)
        if value not in VOLUME_VALUES:
            return None, f"disallowed_volume_value:{value}"
    if attribute == "gender":
        value = _GENDER_SYNONYMS.get(value, value)
        if value not in GENDER_VALUES:
            return None, f"disallowed_gender_value:{value}"
    evidence = obj.get("evidence")
    if not isinstance(evidence, str):
        evidence = ""
    return {"fact": fact, "attribute": attribute, "value": value, "evidence": evidence}, None


def parse_apu_response(
    raw: str,
    source_caption: str,
    origin: str = GENERATED,
    caption_id: str = "",
    extended_attributes: bool = False,
) -> APUSet:
    """Parse a decomposition response into an APUSet. Never raises.

    Units failing schema validation are dropped with a logged reason; when no
    JSON array can be recovered at all, the result has ``format_failed=True``.
    Accepted units get identifiers ``g1..gN`` (generated) or ``r1..rM``
    (reference) in array order. Evidence that is not a substring of the source
    caption (case-insensitive) is downgraded to empty rather than dropping the
    unit, since the fact itself is still verifiable.
    """
    attrs = allowed_attributes(extended_attributes)
    data = recover_json_list(raw)
    if data is None:
        return APUSet(caption_id=caption_id, origin=origin, units=(), format_failed=True)

    prefix = "g" if origin == GENERATED else "r"
    caption_lower = (source_caption or "").lower()
    units: list[APU] = []
    for obj in data:
        fields, reason = _validate_unit(obj, attrs)
        if fields is None:
            logger.debug("dropped unit (%s): %r", reason, obj)
            continue
        evidence = fields["evidence"]
        if evidence and evidence.lower() not in caption_lower:
            logger.debug("evidence not in caption, downgraded: %r", evidence)
            evidence = ""
        units.append(
            APU(
                fact=fields["fact"],
                attribute=fields["attribute"],
                value=fields["value"],
                evidence=evidence,
                identifier=f"{prefix}{len(units) + 1}",
                origin=origin,
            )
        )
    return APUSet(caption_id=caption_id, origin=origin, units=tuple(units), format_failed=False)


def decompose_caption(
    caption_id: str,
    caption_text: str,
    backend,
    origin: str = GENERATED,
    model_id: str = "Qwen2.5-7B-Instruct",
    cache=None,
    extended_attributes: bool = False,
) -> APUSet:
    """Build the prompt, call the text backend, parse the response.

    The raw response lands in the run cache keyed by request digest; a warm
    cache replays it with zero backend calls. Transport errors propagate so
    the caller can mark the sample errored and continue the run.
    """
    from .backends import ChatRequest, text_message

    prompt = build_decomposition_prompt(caption_text, extended_attributes)
    request = ChatRequest(
        model_id=model_id,
        messages=(text_message(prompt),),
        max_tokens=2048,
        meta={"kind": "decompose", "caption_id": caption_id},
    )
    key = request.digest()
    raw = None
    if cache is not None:
        hit = cache.get("decompose", key)
        if hit is not None:
            raw = hit["raw_response"]
    cache_miss = raw is None
    if raw is None:
        raw = backend.complete(request)
    apu_set = parse_apu_response(
        raw, caption_text, origin=origin, caption_id=caption_id,
        extended_attributes=extended_attributes,
    )
    if cache is not None and cache_miss:
        cache.put("decompose", key, {
            "kind": "decompose",
            "caption_id": caption_id,
            "model_id": model_id,
            "prompt_sha256": request.prompt_sha256(),
            "raw_response": raw,
            "parsed_units": [u.to_dict() for u in apu_set.units],
            "format_failed": apu_set.format_failed,
        })
    return apu_set


def count_array_elements(raw: str) -> int | None:
    """Number of elements in the (possibly recovered) response array, if any."""
    data = recover_json_list(raw)
    return len(data) if data is not None else None
