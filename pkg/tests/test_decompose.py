"""Decomposition prompt and parser: examples, recovery corpus, totality."""

import json

import pytest

from emosura.decompose import (
    build_decomposition_prompt,
    count_array_elements,
    decompose_caption,
    extract_json_array,
    parse_apu_response,
)
from emosura.errors import EmptyCaption
from emosura.mock import MockBackend
from emosura.types import APUSet, GENERATED, REFERENCE

CANONICAL = json.dumps([
    {"fact": "The speaker's gender is male.", "attribute": "gender",
     "value": "male", "evidence": "His"},
])


def test_prompt_ends_with_caption():
    prompt = build_decomposition_prompt("His voice is deep.")
    assert prompt.endswith("### Input Text\nHis voice is deep.")
    assert '"pitch", "rate", "volume", "gender", "emotion"' in prompt
    assert "His voice is deep..." in prompt  # worked example stays in the template


def test_prompt_preserves_quotes_verbatim():
    caption = 'She says "stop" with a \'sharp\' tone.'
    assert build_decomposition_prompt(caption).endswith(caption)


def test_prompt_deterministic():
    a = build_decomposition_prompt("A calm voice.")
    b = build_decomposition_prompt("A calm voice.")
    assert a == b


def test_prompt_rejects_empty_caption():
    with pytest.raises(EmptyCaption):
        build_decomposition_prompt("")


def test_extended_attribute_schema_line():
    prompt = build_decomposition_prompt("x", extended_attributes=True)
    assert '"vocal_event"' in prompt and '"texture"' in prompt


def test_parse_canonical_example():
    result = parse_apu_response(CANONICAL, "His voice is deep...")
    assert len(result.units) == 1
    unit = result.units[0]
    assert (unit.attribute, unit.value, unit.evidence) == ("gender", "male", "His")
    assert unit.identifier == "g1"
    assert not result.format_failed


def test_parse_empty_array_is_not_a_format_failure():
    result = parse_apu_response("[]", "whatever")
    assert len(result.units) == 0
    assert not result.format_failed


def test_parse_prose_without_array_is_format_failure():
    result = parse_apu_response("I cannot find any facts here.", "x")
    assert result.format_failed
    assert len(result.units) == 0


WRAPPERS = [
    "{array}",
    "Sure! Here are the facts: {array}",
    "```json\n{array}\n```",
    "```\n{array}\n```",
    "Here you go:\n\n```json\n{array}\n```\nLet me know if you need more.",
    "The JSON list is {array} as requested.",
    "{array}\nHope this helps!",
    "Answer:\n{array}",
    "I analyzed the text. Output: {array}. Done.",
    "```JSON{array}```",
    "  \t{array}\n\n",
    "According to rules 1-6: {array}",
    "Output ->\n{array}",
    "plain text first\nthen {array} trailing",
    "double wrap ``` {array} ```",
    "*bold claim* {array}",
    "prefix [not json] oops {array}",
    "{array} and a second array [1,2,3]",
    "respond: {array}!!!",
    "FINAL {array} FINAL",
]


@pytest.mark.parametrize("wrapper", WRAPPERS)
def test_recovery_corpus_of_wrapped_variants(wrapper):
    # Oracle: parsing the wrapped text equals parsing the bare array.
    expected = parse_apu_response(CANONICAL, "His voice is deep...")
    wrapped = wrapper.format(array=CANONICAL)
    result = parse_apu_response(wrapped, "His voice is deep...")
    assert not result.format_failed
    assert result.units == expected.units


def test_recovery_prefers_bracket_balanced_array():
    text = 'noise ["a", ["nested"], "b"] tail'
    assert extract_json_array(text) == '["a", ["nested"], "b"]'
    # Brackets inside strings must not break balancing.
    tricky = 'x [{"fact": "He said ]oops[", "attribute": "emotion", "value": "calm", "evidence": ""}] y'
    recovered = extract_json_array(tricky)
    assert json.loads(recovered)[0]["fact"] == "He said ]oops["


def test_identifier_assignment_is_positional_over_accepted_units():
    array = json.dumps([
        {"fact": "The pitch of the voice is low.", "attribute": "pitch",
         "value": "low", "evidence": ""},
        {"fact": "Bad unit.", "attribute": "sock_color", "value": "red", "evidence": ""},
        {"fact": "The speaking rate is fast.", "attribute": "rate",
         "value": "fast", "evidence": ""},
    ])
    result = parse_apu_response(array, "low and fast")
    assert [u.identifier for u in result.units] == ["g1", "g2"]
    assert [u.attribute for u in result.units] == ["pitch", "rate"]
    # Accounting: accepted + dropped = array elements.
    assert count_array_elements(array) == 3
    assert len(result.units) == 2


def test_reference_origin_uses_r_prefix():
    result = parse_apu_response(CANONICAL, "His voice is deep...", origin=REFERENCE)
    assert result.units[0].identifier == "r1"
    assert result.origin == REFERENCE


@pytest.mark.parametrize("attribute,value,kept", [
    ("pitch", "low", True),
    ("pitch", "squeaky", False),
    ("rate", "fast", True),
    ("rate", "breakneck", False),
    ("volume", "soft", True),     # folded to quiet
    ("volume", "deafening", False),
    ("gender", "woman", True),    # folded to female
    ("gender", "robot", False),
    ("emotion", "Wistful", True),  # free-form, lowercased
])
def test_value_vocabulary_enforcement(attribute, value, kept):
    array = json.dumps([{
        "fact": "The voice has a property.", "attribute": attribute,
        "value": value, "evidence": "",
    }])
    result = parse_apu_response(array, "caption")
    assert (len(result.units) == 1) is kept
    if kept:
        assert result.units[0].value == result.units[0].value.lower()


def test_volume_and_gender_normalization():
    array = json.dumps([
        {"fact": "The volume of the voice is soft.", "attribute": "volume",
         "value": "Soft", "evidence": ""},
        {"fact": "The speaker's gender is female.", "attribute": "gender",
         "value": "WOMAN", "evidence": ""},
    ])
    result = parse_apu_response(array, "x")
    assert result.units[0].value == "quiet"
    assert result.units[1].value == "female"


def test_multi_sentence_fact_is_dropped():
    array = json.dumps([
        {"fact": "The voice is low. It is also slow.", "attribute": "pitch",
         "value": "low", "evidence": ""},
        {"fact": "The pitch of the voice is low.", "attribute": "pitch",
         "value": "low", "evidence": ""},
    ])
    result = parse_apu_response(array, "x")
    assert len(result.units) == 1
    assert result.units[0].identifier == "g1"


def test_empty_fact_is_dropped():
    array = json.dumps([{"fact": "  ", "attribute": "pitch", "value": "low", "evidence": ""}])
    assert len(parse_apu_response(array, "x").units) == 0


def test_evidence_substring_violation_downgraded_to_empty():
    array = json.dumps([{
        "fact": "The pitch of the voice is low.", "attribute": "pitch",
        "value": "low", "evidence": "growling bass",
    }])
    result = parse_apu_response(array, "A deep LOW voice.")
    assert result.units[0].evidence == ""
    # Case-insensitive matches survive.
    array2 = json.dumps([{
        "fact": "The pitch of the voice is low.", "attribute": "pitch",
        "value": "low", "evidence": "low",
    }])
    result2 = parse_apu_response(array2, "A deep LOW voice.")
    assert result2.units[0].evidence == "low"


def test_apu_set_round_trips_through_dict():
    result = parse_apu_response(CANONICAL, "His voice is deep...", caption_id="cap1")
    again = APUSet.from_dict(result.to_dict())
    assert again == result
    failed = parse_apu_response("garbage", "x", caption_id="cap2")
    assert APUSet.from_dict(failed.to_dict()) == failed


def test_decompose_caption_uses_cache_for_replay(tmp_path):
    from emosura.cache import ResponseCache

    backend = MockBackend({("decompose", "cap1"): CANONICAL})
    cache = ResponseCache(tmp_path / "cache")
    first = decompose_caption("cap1", "His voice is deep...", backend,
                              origin=GENERATED, cache=cache)
    assert backend.calls == 1
    assert len(first.units) == 1
    # Warm cache: zero backend calls, identical value.
    backend2 = MockBackend({}, strict=True)
    cache2 = ResponseCache(tmp_path / "cache")
    second = decompose_caption("cap1", "His voice is deep...", backend2,
                               origin=GENERATED, cache=cache2)
    assert backend2.calls == 0
    assert second == first


def test_decompose_caption_format_failure_encoded_not_raised():
    backend = MockBackend({}, default_response="no json here, sorry")
    result = decompose_caption("cap1", "A caption.", backend)
    assert result.format_failed
    assert len(result.units) == 0
