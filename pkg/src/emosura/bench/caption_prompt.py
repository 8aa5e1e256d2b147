"""Few-shot prompt assembly for reference-caption generation.

Each gold example renders as a feature table followed by its human-written
caption; the target clip's feature table comes last. The actual generation
call is the caller's job (through the backends module).
"""

from __future__ import annotations

from ..errors import NoGoldExamples
from ..types import AcousticFeatures

_INSTRUCTIONS = """You are an expert annotator of emotional speech. Given objective acoustic \
measurements and affect ratings of a speech clip, write one richly detailed natural-language \
caption describing the speaker's voice, delivery, and emotional state. Match the granularity \
and style of the example captions."""


def _feature_table(features: AcousticFeatures, labels: tuple[float, float, float] | None) -> str:
    pitch = f"{features.pitch_median_hz:.1f} Hz" if features.voiced else "unvoiced"
    pitch_var = f"{features.pitch_std_hz:.1f} Hz" if features.voiced else "unvoiced"
    rows = [
        ("pitch", pitch),
        ("pitch variation", pitch_var),
        ("loudness", f"{features.loudness_dbfs:.1f} dBFS"),
        ("jitter", f"{features.jitter_pct:.2f} %"),
        ("shimmer", f"{features.shimmer_pct:.2f} %"),
        ("speech tempo", f"{features.tempo_peaks_per_s:.2f} peaks/s"),
    ]
    if labels is not None:
        valence, arousal, dominance = labels
        rows += [
            ("valence", f"{valence:.2f} / 7"),
            ("arousal", f"{arousal:.2f} / 7"),
            ("dominance", f"{dominance:.2f} / 7"),
        ]
    return "\n".join(f"- {name}: {value}" for name, value in rows)


def assemble_caption_prompt(
    features: AcousticFeatures,
    labels: tuple[float, float, float] | None,
    gold_examples: list[tuple[AcousticFeatures, str]],
    gold_labels: list[tuple[float, float, float] | None] | None = None,
) -> str:
    """Deterministic few-shot captioning prompt; needs >= 1 gold example."""
    if not gold_examples:
        raise NoGoldExamples("need at least one gold example")
    if gold_labels is None:
        gold_labels = [None] * len(gold_examples)
    blocks = [_INSTRUCTIONS, ""]
    for i, ((ex_features, caption), ex_labels) in enumerate(zip(gold_examples, gold_labels), 1):
        blocks.append(f"### Example {i}")
        blocks.append("Measurements:")
        blocks.append(_feature_table(ex_features, ex_labels))
        blocks.append(f"Caption: {caption}")
        blocks.append("")
    blocks.append("### Target clip")
    blocks.append("Measurements:")
    blocks.append(_feature_table(features, labels))
    blocks.append("Caption:")
    return "\n".join(blocks)
