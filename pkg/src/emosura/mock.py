"""Deterministic stand-in backends for tests and offline runs.

``MockBackend`` is a pure fixture-table lookup. ``OracleBackend`` is a tiny
rule-based "model" that actually reads the prompts: it decomposes captions by
vocabulary scan, verifies facts against a per-sample truth table, and matches
units by fact equality. Because it answers through the same prompt/parse
surfaces as a real endpoint, whole pipeline runs can execute offline with
known-correct behavior.
"""

from __future__ import annotations

import json
import re

from .backends import ChatRequest
from .errors import BackendError, MissingFixture

# Surface vocabulary the rule decomposer recognizes, per attribute and
# normalized value. Perturbation lexicons stay inside this vocabulary so
# sabotaged captions remain decomposable by the oracle.
VOCABULARY: dict[str, dict[str, tuple[str, ...]]] = {
    "gender": {
        "male": ("male", "man", "he", "his", "him", "himself", "gentleman"),
        "female": ("female", "woman", "she", "her", "herself", "lady"),
    },
    "pitch": {
        "low": ("low", "deep", "low-pitched", "rumbling", "bass"),
        "high": ("high", "high-pitched", "delicate", "shrill"),
        "normal": ("medium-pitched",),
    },
    "rate": {
        "slow": ("slow", "slowly", "unhurried", "measured", "leisurely"),
        "fast": ("fast", "rapidly", "quickly", "hurried", "frantic", "rushed"),
    },
    "volume": {
        "quiet": ("quiet", "quietly", "soft", "softly", "subdued", "hushed"),
        "loud": ("loud", "loudly", "booming", "thunderous"),
    },
    "emotion": {
        "happy": ("happy", "cheerful", "joyful", "upbeat", "energetic", "positivity"),
        "sad": ("sad", "sorrowful", "melancholic", "gloomy", "negativity"),
        "angry": ("angry", "furious", "aggressive", "irritated", "hostile"),
        "fearful": ("fearful", "frightened", "anxious", "nervous", "hesitant", "shaky", "dread"),
        "calm": ("calm", "relaxed", "serene", "composed", "poised"),
        "confident": ("confident", "assured", "bold", "commanding"),
    },
    "texture": {
        "rough": ("rough", "raspy", "gruff", "gravelly", "harsh"),
        "smooth": ("smooth", "silky", "clear", "gentle"),
        "musical": ("musical", "rhythmic", "melodic", "operatic"),
    },
    "vocal_event": {
        "speaking": ("delivers", "speaks", "talks", "says"),
        "singing": ("sings", "singing", "song-like"),
        "sobbing": ("sobs", "sobbing", "crying"),
        "shouting": ("shouts", "shouting", "yells"),
        "laughing": ("laughs", "laughing"),
    },
}

FACT_TEMPLATES = {
    "gender": "The speaker's gender is {value}.",
    "pitch": "The pitch of the voice is {value}.",
    "rate": "The speaking rate is {value}.",
    "volume": "The volume of the voice is {value}.",
    "emotion": "The speaker's emotion is {value}.",
    "texture": "The texture of the voice is {value}.",
    "vocal_event": "The speaker is {value}.",
}

_FACT_PATTERNS = {
    "gender": re.compile(r"speaker's gender is (\w+)", re.IGNORECASE),
    "pitch": re.compile(r"pitch of the voice is (\w+)", re.IGNORECASE),
    "rate": re.compile(r"speaking rate is (\w+)", re.IGNORECASE),
    "volume": re.compile(r"volume of the voice is (\w+)", re.IGNORECASE),
    "emotion": re.compile(r"speaker's emotion is (\w+)", re.IGNORECASE),
    "texture": re.compile(r"texture of the voice is (\w+)", re.IGNORECASE),
    "vocal_event": re.compile(r"speaker is (\w+[\w-]*)\.?$", re.IGNORECASE),
}


def _term_index() -> list[tuple[str, str, str]]:
    """(term, attribute, value) triples, longest term first."""
    rows = []
    for attribute, values in VOCABULARY.items():
        for value, terms in values.items():
            for term in terms:
                rows.append((term, attribute, value))
    rows.sort(key=lambda r: (-len(r[0]), r[0]))
    return rows


_TERMS = _term_index()
_TERM_RE = re.compile(
    r"\b(" + "|".join(re.escape(t) for t, _a, _v in _TERMS) + r")\b",
    re.IGNORECASE,
)
_TERM_LOOKUP = {t.lower(): (a, v) for t, a, v in _TERMS}


def scan_caption(caption: str) -> list[tuple[str, str, str]]:
    """All (attribute, value, evidence) hits in the caption, in text order.

    One hit per distinct (attribute, value) pair, keeping the first evidence
    span encountered.
    """
    seen: set[tuple[str, str]] = set()
    hits: list[tuple[str, str, str]] = []
    for m in _TERM_RE.finditer(caption):
        attribute, value = _TERM_LOOKUP[m.group(0).lower()]
        if (attribute, value) in seen:
            continue
        seen.add((attribute, value))
        hits.append((attribute, value, m.group(0)))
    return hits


def rule_decompose(caption: str) -> str:
    """Decompose a caption by vocabulary scan; returns the JSON array text."""
    units = [
        {
            "fact": FACT_TEMPLATES[attribute].format(value=value),
            "attribute": attribute,
            "value": value,
            "evidence": evidence,
        }
        for attribute, value, evidence in scan_caption(caption)
    ]
    return json.dumps(units, ensure_ascii=False)


def parse_fact(fact: str) -> tuple[str, str] | None:
    """Recover (attribute, value) from a fact sentence.

    Template facts parse exactly; anything else falls back to a vocabulary
    scan and succeeds only when exactly one attribute is mentioned.
    """
    for attribute, pattern in _FACT_PATTERNS.items():
        m = pattern.search(fact)
        if m:
            return attribute, m.group(1).lower().rstrip(".")
    hits = scan_caption(fact)
    attributes = {a for a, _v, _e in hits}
    if len(attributes) == 1:
        a, v, _e = hits[0]
        return a, v
    return None


class MockBackend:
    """Pure lookup backend driven by a fixture table.

    Keys are ``(kind, id)`` where id is the apu_id for verification requests
    and the caption_id otherwise; three-element ``(kind, sample_id, apu_id)``
    keys are also honored for multi-sample verification tables. Unknown keys
    return ``default_response`` unless ``strict`` is set.
    """

    def __init__(self, table: dict, strict: bool = False, default_response: str = ""):
        self.table = dict(table)
        self.strict = strict
        self.default_response = default_response
        self.calls = 0

    def complete(self, request: ChatRequest) -> str:
        self.calls += 1
        meta = request.meta
        kind = meta.get("kind", "chat")
        sample_id = meta.get("sample_id")
        apu_id = meta.get("apu_id")
        candidates = []
        if sample_id and apu_id:
            candidates.append((kind, sample_id, apu_id))
        if apu_id:
            candidates.append((kind, apu_id))
        caption_id = meta.get("caption_id")
        if caption_id:
            candidates.append((kind, caption_id))
        if sample_id:
            candidates.append((kind, sample_id))
        for key in candidates:
            if key in self.table:
                return self.table[key]
        if self.strict:
            raise MissingFixture(f"no mock fixture for any of {candidates}")
        return self.default_response


class OracleBackend:
    """Rule-based model: answers all three pipeline stages from a truth table.

    ``truth`` maps sample_id to {attribute: value}. Verification reads the
    sample id from request metadata (the oracle cannot hear the attached
    audio) and answers "1" only when the fact's attribute/value agrees with
    the table; unknown attributes and unparseable facts are rejected, which
    keeps the oracle conservative.
    """

    def __init__(self, truth: dict[str, dict[str, str]], strict: bool = True):
        self.truth = truth
        self.strict = strict
        self.calls = 0

    @classmethod
    def from_file(cls, path, strict: bool = True) -> "OracleBackend":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh), strict=strict)

    def complete(self, request: ChatRequest) -> str:
        self.calls += 1
        kind = request.meta.get("kind")
        if kind == "decompose":
            return self._decompose(request)
        if kind == "verify":
            return self._verify(request)
        if kind == "match":
            return self._match(request)
        raise BackendError(f"oracle backend cannot serve kind {kind!r}")

    def _decompose(self, request: ChatRequest) -> str:
        prompt = request.messages[-1].text
        marker = "### Input Text\n"
        if marker not in prompt:
            raise BackendError("decomposition prompt missing input-text marker")
        caption = prompt.split(marker, 1)[1]
        return rule_decompose(caption)

    def _verify(self, request: ChatRequest) -> str:
        sample_id = request.meta.get("sample_id")
        if sample_id not in self.truth:
            if self.strict:
                raise MissingFixture(f"no truth entry for sample {sample_id!r}")
            return "0"
        prompt = request.messages[-1].text
        marker = "> Fact: "
        idx = prompt.rfind(marker)
        if idx == -1:
            return "0"
        fact = prompt[idx + len(marker):].strip()
        parsed = parse_fact(fact)
        if parsed is None:
            return "0"
        attribute, value = parsed
        expected = self.truth[sample_id].get(attribute)
        if expected is None:
            return "0"
        if isinstance(expected, (list, tuple, set)):
            return "1" if value in {str(e).lower() for e in expected} else "0"
        return "1" if value == str(expected).lower() else "0"

    def _match(self, request: ChatRequest) -> str:
        prompt = request.messages[-1].text
        oracle_marker = "> > > Oracle Set: "
        candidate_marker = "> > > Set of Primitive information units: "
        o_idx = prompt.rfind(oracle_marker)
        c_idx = prompt.rfind(candidate_marker)
        if o_idx == -1 or c_idx == -1 or c_idx < o_idx:
            raise BackendError("matching prompt missing set markers")
        oracle_json = prompt[o_idx + len(oracle_marker):c_idx].strip()
        candidate_json = prompt[c_idx + len(candidate_marker):].strip()
        oracle_units = json.loads(oracle_json)
        candidate_units = json.loads(candidate_json)
        by_fact: dict[str, str] = {}
        for unit in oracle_units:
            fact = str(unit.get("fact", "")).strip().lower()
            by_fact.setdefault(fact, str(unit.get("id")))
        out = []
        for unit in candidate_units:
            fact = str(unit.get("fact", "")).strip()
            matched = by_fact.get(fact.lower(), "None")
            out.append({
                "fact": fact,
                "identifier": unit.get("identifier"),
                "matched_oracle_id": matched,
            })
        return json.dumps(out, ensure_ascii=False)
