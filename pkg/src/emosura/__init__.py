"""Atomic decompose-verify-match evaluation for emotional speech captions.

The pipeline scores a generated caption in three stages: decomposition into
atomic perceptual units, audio-grounded binary verification of each unit, and
semantic matching against the reference units. Precision (verified fraction),
recall (reference coverage plus verified extra content) and their harmonic
mean combine with a descriptive-only variant into the final score.
"""

from .scoring import (
    emosura_final,
    f1,
    is_descriptive,
    precision_score,
    recall_score,
    score_caption,
)
from .types import (
    APU,
    APUSet,
    AcousticFeatures,
    AudioRef,
    CaptionScore,
    MatchResult,
    PerturbationSpec,
    SampleRecord,
    ScoreBreakdown,
    Verdict,
    VerificationResult,
)
from .decompose import build_decomposition_prompt, decompose_caption, parse_apu_response
from .verify import build_verification_prompt, format_failure_rate, parse_verdict, verify_apus
from .matching import (
    build_matching_prompt,
    compute_match_sets,
    match_and_score,
    match_apus,
    parse_match_response,
)
from .backends import (
    Backend,
    BackendConfig,
    ChatRequest,
    HttpBackend,
    audio_chat_complete,
    chat_complete,
)
from .cache import ResponseCache
from .mock import MockBackend, OracleBackend
from .pipeline import EvalConfig, evaluate_sample, run_scoring

__version__ = "0.1.0"

__all__ = [
    "APU",
    "APUSet",
    "AcousticFeatures",
    "AudioRef",
    "Backend",
    "BackendConfig",
    "CaptionScore",
    "ChatRequest",
    "EvalConfig",
    "HttpBackend",
    "MatchResult",
    "MockBackend",
    "OracleBackend",
    "PerturbationSpec",
    "ResponseCache",
    "SampleRecord",
    "ScoreBreakdown",
    "Verdict",
    "VerificationResult",
    "audio_chat_complete",
    "build_decomposition_prompt",
    "build_matching_prompt",
    "build_verification_prompt",
    "chat_complete",
    "compute_match_sets",
    "decompose_caption",
    "emosura_final",
    "evaluate_sample",
    "f1",
    "format_failure_rate",
    "is_descriptive",
    "match_and_score",
    "match_apus",
    "parse_apu_response",
    "parse_match_response",
    "parse_verdict",
    "precision_score",
    "recall_score",
    "run_scoring",
    "score_caption",
    "verify_apus",
]
