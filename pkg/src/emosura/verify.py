"""Audio-grounded verification of generated units.

Each unit is judged independently by the audio model with a strict binary
output contract (1/Yes = supported, 0/No = not supported). Responses that
carry no binary token become FormatFailure verdicts, which score as No
(an unparseable answer cannot support a claim) but are tallied separately.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

from .backends import Backend, ChatRequest, audio_message
from .errors import BackendError, EmptyCaption
from .types import (
    APU,
    APUSet,
    AudioRef,
    FORMAT_FAILURE,
    NO,
    Verdict,
    VerificationResult,
    YES,
)

logger = logging.getLogger(__name__)

_PROMPT_TEMPLATE = """You are an expert audio verifier.

### Task
You will be given a "Fact", an audio file, and a set of "Ground Truth" text. Your task is to determine if the "Fact" is correct.

### Rules
1. Audio is Primary: Your primary judgment must be based only on what is heard in the audio.
2. GT is Secondary: The GT text is a reference.
3. Conflict Resolution Rule: The audio is the ultimate source of truth.

Output
- 1 -> the fact is correct
- 0 -> the fact is incorrect

> Ground Truth: {gt_context}

Input:
> Fact: {fact}"""

_YES_TOKENS = frozenset({"1", "yes", "true"})
_NO_TOKENS = frozenset({"0", "no", "false"})
_TRAILING_PUNCT = ".,;:!?\"'`)]}"


def build_verification_prompt(apu: APU, gt_context: str = "") -> str:
    """Render the binary verification prompt for one unit.

    ``gt_context`` may be empty for pure audio-grounded judging; when present
    it appears verbatim after the Ground Truth marker.
    """
    if not apu.fact:
        raise EmptyCaption("APU fact must be non-empty")
    return _PROMPT_TEMPLATE.format(gt_context=gt_context, fact=apu.fact)


def _normalize_token(token: str) -> str:
    return token.strip().rstrip(_TRAILING_PUNCT).lower()


def parse_verdict(raw: str) -> str:
    """Map a model response to Yes / No / FormatFailure. Never raises.

    The whole trimmed response is checked first; if that is not a binary
    token, the first whitespace-delimited token gets one more chance.
    """
    if not isinstance(raw, str):
        return FORMAT_FAILURE
    whole = _normalize_token(raw)
    if whole in _YES_TOKENS:
        return YES
    if whole in _NO_TOKENS:
        return NO
    parts = raw.split()
    if parts:
        lead = _normalize_token(parts[0])
        if lead in _YES_TOKENS:
            return YES
        if lead in _NO_TOKENS:
            return NO
    return FORMAT_FAILURE


def verify_apus(
    apus: APUSet,
    audio: AudioRef,
    gt_context: str,
    backend: Backend,
    model_id: str = "Qwen2-Audio-7B-Instruct",
    max_inflight: int = 8,
    audio_bytes: bytes | None = None,
    cache=None,
) -> VerificationResult:
    """Judge every unit against the audio; one verdict per unit, in unit order.

    Per-unit calls run concurrently up to ``max_inflight``; the result is
    assembled in unit order so it does not depend on completion order. A
    transport failure after retries turns that unit into a FormatFailure
    verdict whose raw_response records the error. With a warm ``cache``, no
    backend call is made for a unit whose request digest is already stored.
    """
    if audio_bytes is None:
        with open(audio.path, "rb") as fh:
            audio_bytes = fh.read()
    digest = audio.content_digest or AudioRef.digest_bytes(audio_bytes)

    def judge(apu: APU) -> Verdict:
        prompt = build_verification_prompt(apu, gt_context)
        request = ChatRequest(
            model_id=model_id,
            messages=(audio_message(prompt, audio_bytes),),
            meta={
                "kind": "verify",
                "sample_id": audio.sample_id,
                "apu_id": apu.identifier,
                "audio_digest": digest,
            },
        )
        key = request.digest()
        if cache is not None:
            hit = cache.get("verify", key)
            if hit is not None:
                return Verdict(apu_id=apu.identifier, decision=hit["decision"],
                               raw_response=hit.get("raw_response", ""))
        try:
            raw = backend.complete(request)
        except BackendError as exc:
            logger.warning("verification backend error for %s: %s", apu.identifier, exc)
            return Verdict(apu_id=apu.identifier, decision=FORMAT_FAILURE,
                           raw_response=f"<backend-error: {exc}>")
        verdict = Verdict(apu_id=apu.identifier, decision=parse_verdict(raw), raw_response=raw)
        if cache is not None:
            cache.put("verify", key, {
                "kind": "verify",
                "sample_id": audio.sample_id,
                "apu_id": apu.identifier,
                "model_id": model_id,
                "audio_digest": digest,
                "prompt_sha256": request.prompt_sha256(),
                "raw_response": raw,
                "decision": verdict.decision,
            })
        return verdict

    units = apus.units
    if not units:
        return VerificationResult(apu_set_ref=apus.caption_id, verdicts=())
    if max_inflight <= 1 or len(units) == 1:
        verdicts = tuple(judge(u) for u in units)
    else:
        with ThreadPoolExecutor(max_workers=min(max_inflight, len(units))) as pool:
            verdicts = tuple(pool.map(judge, units))
    return VerificationResult(apu_set_ref=apus.caption_id, verdicts=verdicts)


def format_failure_rate(verdicts) -> float:
    """Fraction of verdicts that are FormatFailure; 0.0 for an empty list."""
    verdicts = list(verdicts)
    if not verdicts:
        return 0.0
    failures = sum(1 for v in verdicts if v.decision == FORMAT_FAILURE)
    return failures / len(verdicts)
