"""Deterministic toy corpora for offline runs, tests and demos.

``build_toy_corpus`` writes a small benchmark (synthetic tone WAVs, a JSONL
manifest with reference and generated captions, and a truth table for the
oracle backend). Captions are built from the vocabulary the oracle
decomposer understands, so the whole pipeline runs end to end with
known-correct behavior. ``build_mechanism_corpus`` creates the
longer-is-better corpus used to demonstrate the length-penalty failure of
n-gram metrics.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .manifest import write_manifest
from .types import SampleRecord

SAMPLE_RATE = 8000

# One attribute profile per sample. Texture and vocal_event matter only in
# extended-attribute mode; the base schema ignores them.
PROFILES = [
    {"gender": "male", "pitch": "low", "rate": "slow", "volume": "quiet",
     "emotion": "sad", "texture": "rough", "vocal_event": "speaking"},
    {"gender": "female", "pitch": "high", "rate": "fast", "volume": "loud",
     "emotion": "happy", "texture": "smooth", "vocal_event": "speaking"},
    {"gender": "male", "pitch": "high", "rate": "slow", "volume": "loud",
     "emotion": "angry", "texture": "rough", "vocal_event": "speaking"},
    {"gender": "female", "pitch": "low", "rate": "fast", "volume": "quiet",
     "emotion": "calm", "texture": "smooth", "vocal_event": "speaking"},
    {"gender": "male", "pitch": "low", "rate": "fast", "volume": "loud",
     "emotion": "confident", "texture": "rough", "vocal_event": "speaking"},
    {"gender": "female", "pitch": "high", "rate": "slow", "volume": "quiet",
     "emotion": "fearful", "texture": "smooth", "vocal_event": "speaking"},
]

_SURFACE = {
    ("gender", "male"): ("male", "He"),
    ("gender", "female"): ("female", "She"),
    ("pitch", "low"): ("low",),
    ("pitch", "high"): ("high",),
    ("rate", "slow"): ("slowly",),
    ("rate", "fast"): ("rapidly",),
    ("volume", "quiet"): ("quiet",),
    ("volume", "loud"): ("loud",),
    ("texture", "rough"): ("gruff",),
    ("texture", "smooth"): ("silky",),
}

_EMOTION_SURFACE = {
    "sad": "sad", "happy": "joyful", "angry": "furious", "calm": "composed",
    "confident": "confident", "fearful": "anxious",
}

_WRONG_EMOTION = {
    "sad": "joyful", "happy": "sad", "angry": "composed", "calm": "furious",
    "confident": "anxious", "fearful": "confident",
}

_F0 = {("male", "low"): 100.0, ("male", "high"): 180.0,
       ("female", "low"): 170.0, ("female", "high"): 260.0}
_AMPLITUDE = {"quiet": 0.1, "normal": 0.25, "loud": 0.5}


def reference_caption(profile: dict, include_volume: bool) -> str:
    gender = _SURFACE[("gender", profile["gender"])][0]
    pronoun = _SURFACE[("gender", profile["gender"])][1]
    pitch = _SURFACE[("pitch", profile["pitch"])][0]
    rate = _SURFACE[("rate", profile["rate"])][0]
    volume = _SURFACE[("volume", profile["volume"])][0]
    texture = _SURFACE[("texture", profile["texture"])][0]
    emotion = _EMOTION_SURFACE[profile["emotion"]]
    voice = f"{pitch}, {volume} voice" if include_volume else f"{pitch} voice"
    return (
        f"A {gender} speaker delivers the line in a {voice} with a {texture} texture. "
        f"{pronoun} speaks {rate}, and the tone stays {emotion} throughout."
    )


def accurate_caption(profile: dict) -> str:
    gender = _SURFACE[("gender", profile["gender"])][0]
    pitch = _SURFACE[("pitch", profile["pitch"])][0]
    rate = _SURFACE[("rate", profile["rate"])][0]
    volume = _SURFACE[("volume", profile["volume"])][0]
    emotion = _EMOTION_SURFACE[profile["emotion"]]
    return (
        f"The {gender} voice is {pitch} and {volume}, moving {rate} "
        f"with a {emotion} feel."
    )


def hallucinating_caption(profile: dict) -> str:
    """Wrong gender and wrong emotion; pitch, rate and volume stay correct."""
    wrong_gender = "female" if profile["gender"] == "male" else "male"
    gender = _SURFACE[("gender", wrong_gender)][0]
    pitch = _SURFACE[("pitch", profile["pitch"])][0]
    rate = _SURFACE[("rate", profile["rate"])][0]
    volume = _SURFACE[("volume", profile["volume"])][0]
    emotion = _WRONG_EMOTION[profile["emotion"]]
    return (
        f"The {gender} voice is {pitch} and {volume}, moving {rate} "
        f"with a {emotion} feel."
    )


def terse_caption(profile: dict) -> str:
    gender = _SURFACE[("gender", profile["gender"])][0]
    emotion = _EMOTION_SURFACE[profile["emotion"]]
    return f"A {gender} speaker sounding {emotion}."


def write_tone_wav(path: Path, f0: float, amplitude: float,
                   duration_s: float = 3.5, sample_rate: int = SAMPLE_RATE) -> None:
    """Sine tone with mild 3 Hz amplitude modulation (gives tempo peaks)."""
    t = np.arange(int(duration_s * sample_rate)) / sample_rate
    am = 1.0 + 0.3 * np.sin(2 * np.pi * 3.0 * t)
    signal = amplitude * am / 1.3 * np.sin(2 * np.pi * f0 * t)
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(path, sample_rate, (signal * 32767).astype(np.int16))


def build_toy_corpus(directory: str | Path, mos: bool = True) -> tuple[Path, Path]:
    """Write the six-sample toy benchmark; returns (manifest_path, truth_path)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    records = []
    truth = {}
    for i, profile in enumerate(PROFILES):
        sample_id = f"toy{i:03d}"
        rel_audio = f"audio/{sample_id}.wav"
        write_tone_wav(
            directory / rel_audio,
            f0=_F0[(profile["gender"], profile["pitch"])],
            amplitude=_AMPLITUDE[profile["volume"]],
        )
        include_volume = i % 2 == 1  # even samples omit volume from the reference
        records.append(SampleRecord(
            sample_id=sample_id,
            audio_path=rel_audio,
            duration_s=3.5,
            valence_mean=2.0 + i * 0.8,
            valence_std=0.4 + 0.1 * (i % 3),
            arousal_mean=5.5 - i * 0.6,
            arousal_std=0.5,
            dominance_mean=3.0 + 0.3 * i,
            reference_caption=reference_caption(profile, include_volume),
            generated_captions={
                "sys_accurate": accurate_caption(profile),
                "sys_hallucinating": hallucinating_caption(profile),
                "sys_terse": terse_caption(profile),
            },
            human_mos=[4, 5, 4] if mos else None,
        ))
        truth[sample_id] = dict(profile)
    manifest_path = directory / "manifest.jsonl"
    write_manifest(manifest_path, records)
    truth_path = directory / "truth.json"
    truth_path.write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest_path, truth_path


_PADDING_SENTENCE = (
    "The recording continues while the room ambience stays steady and the "
    "microphone hum persists across the take."
)

_MECHANISM_ATTRS = ("emotion", "pitch", "volume", "rate", "gender")


def build_mechanism_corpus(directory: str | Path, n: int = 10) -> tuple[Path, Path]:
    """Corpus where better captions are systematically longer.

    Caption quality i covers 1 + i // 2 attributes correctly (never wrong,
    just incomplete) and pads with 2 * i sentences of audio-neutral filler.
    MOS rises linearly with quality, so n-gram metrics (which punish the
    filler) anti-correlate with quality while the atomic pipeline tracks it.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    profile = PROFILES[0]
    records = []
    truth = {}
    for i in range(n):
        sample_id = f"mech{i:03d}"
        rel_audio = f"audio/{sample_id}.wav"
        write_tone_wav(directory / rel_audio,
                       f0=_F0[(profile["gender"], profile["pitch"])],
                       amplitude=_AMPLITUDE[profile["volume"]],
                       duration_s=0.8)
        covered = 1 + i // 2
        bits = []
        for attr in _MECHANISM_ATTRS[:covered]:
            if attr == "emotion":
                bits.append(f"the tone is {_EMOTION_SURFACE[profile['emotion']]}")
            elif attr == "gender":
                bits.append(f"the speaker is {_SURFACE[('gender', profile['gender'])][0]}")
            elif attr == "rate":
                bits.append(f"the delivery moves {_SURFACE[('rate', profile['rate'])][0]}")
            else:
                bits.append(f"the {attr} is {_SURFACE[(attr, profile[attr])][0]}")
        caption = "In this clip " + ", and ".join(bits) + ". " + " ".join(
            [_PADDING_SENTENCE] * (2 * i)
        )
        mos_value = 1 + round(4 * i / max(n - 1, 1))
        records.append(SampleRecord(
            sample_id=sample_id,
            audio_path=rel_audio,
            duration_s=0.8,
            valence_mean=3.0, valence_std=0.5,
            arousal_mean=4.0, arousal_std=0.5,
            dominance_mean=3.5,
            reference_caption=reference_caption(profile, include_volume=True),
            generated_captions={"sys": caption.strip()},
            human_mos=[mos_value],
        ))
        truth[sample_id] = dict(profile)
    manifest_path = directory / "manifest.jsonl"
    write_manifest(manifest_path, records)
    truth_path = directory / "truth.json"
    truth_path.write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest_path, truth_path
