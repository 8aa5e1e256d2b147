"""Benchmark construction: curation, acoustic features, prompts, perturbation."""

from .curate import assign_bin, curate, filter_consensus, filter_duration, stratified_sample
from .features import extract_features
from .caption_prompt import assemble_caption_prompt
from .perturb import Lexicon, detection_rate, invert, load_default_lexicon, perturb

__all__ = [
    "assign_bin",
    "curate",
    "filter_consensus",
    "filter_duration",
    "stratified_sample",
    "extract_features",
    "assemble_caption_prompt",
    "Lexicon",
    "detection_rate",
    "invert",
    "load_default_lexicon",
    "perturb",
]
