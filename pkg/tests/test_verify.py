"""Verification prompt, verdict parsing, conservative policy, cache replay."""

import random

import pytest

from emosura.backends import ChatRequest
from emosura.cache import ResponseCache
from emosura.errors import BackendError
from emosura.mock import MockBackend
from emosura.types import (
    APU,
    APUSet,
    AudioRef,
    FORMAT_FAILURE,
    GENERATED,
    NO,
    Verdict,
    YES,
)
from emosura.verify import (
    build_verification_prompt,
    format_failure_rate,
    parse_verdict,
    verify_apus,
)


def _apu(ident="g1", fact="The speaker's gender is male."):
    return APU(fact=fact, attribute="gender", value="male", evidence="",
               identifier=ident)


def test_prompt_contains_rules_and_fact():
    prompt = build_verification_prompt(_apu(), gt_context="")
    assert "The audio is the ultimate source of truth." in prompt
    assert "> Fact: The speaker's gender is male." in prompt
    assert "> Ground Truth: \n" in prompt  # empty slot stays in place


def test_prompt_embeds_gt_verbatim_and_is_deterministic():
    gt = "A male speaker, low voice."
    a = build_verification_prompt(_apu(), gt)
    b = build_verification_prompt(_apu(), gt)
    assert a == b
    assert f"> Ground Truth: {gt}" in a


@pytest.mark.parametrize("raw,expected", [
    ("1", YES),
    ("0", NO),
    ("yes", YES),
    ("No.", NO),
    ("TRUE", YES),
    ("false!", NO),
    ("  1.  ", YES),
    ("Yes, the audio supports this.", YES),
    ("no - there is no such cue", NO),
    ("It depends on the prosody", FORMAT_FAILURE),
    ("", FORMAT_FAILURE),
    ("2", FORMAT_FAILURE),
    ("the answer is no", FORMAT_FAILURE),  # only the leading token is tried
])
def test_parse_verdict_cases(raw, expected):
    assert parse_verdict(raw) == expected


def _apuset(n=3):
    return APUSet(
        caption_id="cap", origin=GENERATED,
        units=tuple(_apu(f"g{i+1}", fact=f"Fact number {i+1}.") for i in range(n)),
    )


def _audio(tmp_path):
    wav = tmp_path / "a.wav"
    wav.write_bytes(b"RIFFfakewav" * 3)
    return AudioRef(sample_id="s1", path=str(wav), duration_s=1.0)


def test_verify_apus_with_truth_table(tmp_path):
    backend = MockBackend({
        ("verify", "g1"): "1",
        ("verify", "g2"): "0",
        ("verify", "g3"): "yes",
    })
    result = verify_apus(_apuset(), _audio(tmp_path), "", backend)
    assert [v.apu_id for v in result.verdicts] == ["g1", "g2", "g3"]
    assert result.verified_ids == {"g1", "g3"}
    assert len(result.verified_ids) / len(result.verdicts) == pytest.approx(2 / 3)


def test_verify_empty_set_yields_no_verdicts(tmp_path):
    backend = MockBackend({}, strict=True)
    empty = APUSet(caption_id="cap", origin=GENERATED, units=())
    result = verify_apus(empty, _audio(tmp_path), "", backend)
    assert result.verdicts == ()
    assert backend.calls == 0


def test_all_format_failures_score_zero_and_are_tallied(tmp_path):
    backend = MockBackend({}, default_response="unsure")
    result = verify_apus(_apuset(), _audio(tmp_path), "", backend)
    assert result.verified_ids == set()
    assert result.failure_count == 3


def test_format_failure_rate_values():
    verdicts = [Verdict(f"a{i}", FORMAT_FAILURE) for i in range(561)]
    verdicts += [Verdict(f"b{i}", YES) for i in range(10000 - 561)]
    assert format_failure_rate(verdicts) == pytest.approx(0.0561)
    assert format_failure_rate([Verdict("x", YES)] * 50) == 0.0
    assert format_failure_rate([Verdict("x", FORMAT_FAILURE)] * 3) == 1.0
    assert format_failure_rate([]) == 0.0


def test_format_failure_never_increases_precision():
    rng = random.Random(5)
    for _ in range(200):
        n = rng.randint(1, 12)
        decisions = [rng.choice([YES, NO, FORMAT_FAILURE]) for _ in range(n)]
        conservative = sum(d == YES for d in decisions) / n
        lenient = sum(d in (YES, FORMAT_FAILURE) for d in decisions) / n
        assert conservative <= lenient


def test_dispatch_order_invariance(tmp_path):
    table = {("verify", f"g{i+1}"): ("1" if i % 2 == 0 else "0") for i in range(8)}
    apus = _apuset(8)
    audio = _audio(tmp_path)
    serial = verify_apus(apus, audio, "", MockBackend(table), max_inflight=1)
    parallel = verify_apus(apus, audio, "", MockBackend(table), max_inflight=8)
    assert serial.verdicts == parallel.verdicts
    # Shuffled unit order: same verdict multiset, per-unit decisions unchanged.
    shuffled_units = list(apus.units)
    random.Random(0).shuffle(shuffled_units)
    shuffled = APUSet(caption_id="cap", origin=GENERATED, units=tuple(shuffled_units))
    result = verify_apus(shuffled, audio, "", MockBackend(table), max_inflight=4)
    assert {(v.apu_id, v.decision) for v in result.verdicts} == \
        {(v.apu_id, v.decision) for v in serial.verdicts}


class _ExplodingBackend:
    def complete(self, request: ChatRequest) -> str:
        raise BackendError("endpoint unreachable")


def test_backend_error_becomes_format_failure_with_error_text(tmp_path):
    result = verify_apus(_apuset(1), _audio(tmp_path), "", _ExplodingBackend())
    verdict = result.verdicts[0]
    assert verdict.decision == FORMAT_FAILURE
    assert "endpoint unreachable" in verdict.raw_response


def test_cache_replay_issues_zero_calls(tmp_path):
    table = {("verify", f"g{i+1}"): "1" for i in range(3)}
    cache = ResponseCache(tmp_path / "cache")
    audio = _audio(tmp_path)
    backend = MockBackend(table)
    first = verify_apus(_apuset(), audio, "gt", backend, cache=cache)
    assert backend.calls == 3
    strict = MockBackend({}, strict=True)
    cache2 = ResponseCache(tmp_path / "cache")
    second = verify_apus(_apuset(), audio, "gt", strict, cache=cache2)
    assert strict.calls == 0
    assert second == first
