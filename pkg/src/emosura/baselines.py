"""Rule-based caption metrics: BLEU-4, ROUGE-L and CIDEr-D.

These are the n-gram baselines the atomic pipeline is compared against. All
three share one deterministic tokenizer (lowercase, punctuation split into
separate tokens). Smoothing choices are pinned here: BLEU uses add-one
smoothing on zero counts for orders two and up, with a tiny floor for a zero
unigram count so disjoint pairs score near zero instead of exactly zero.
"""

from __future__ import annotations

import math
import re
from collections import Counter, defaultdict

from .errors import CorpusTooSmall, EmptyCandidate, EmptyInput

_PUNCT_RE = re.compile(r"([^\w\s]+)")
_UNIGRAM_FLOOR = 1e-9

ROUGE_BETA = 1.2
CIDER_SIGMA = 6.0
MAX_NGRAM = 4


def tokenize(text: str) -> list[str]:
    """Lowercase tokens with punctuation split off as separate tokens."""
    return _PUNCT_RE.sub(r" \1 ", text.lower()).split()


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _closest_ref_len(cand_len: int, ref_lens: list[int]) -> int:
    # Tie on distance prefers the shorter reference.
    return min(ref_lens, key=lambda r: (abs(r - cand_len), r))


def bleu4(candidate: list[str], references: list[list[str]]) -> float:
    """Corpus-of-one BLEU with clipped precisions up to 4-grams.

    Brevity penalty exp(1 - r/c) applies when the candidate is shorter than
    the closest reference.
    """
    if not candidate:
        raise EmptyCandidate("candidate has no tokens")
    if not references or not any(references):
        raise EmptyCandidate("need at least one non-empty reference")

    log_sum = 0.0
    for n in range(1, MAX_NGRAM + 1):
        cand_counts = _ngram_counts(candidate, n)
        guess = max(0, len(candidate) - n + 1)
        max_ref_counts: Counter = Counter()
        for ref in references:
            for gram, count in _ngram_counts(ref, n).items():
                max_ref_counts[gram] = max(max_ref_counts[gram], count)
        correct = sum(min(count, max_ref_counts[gram]) for gram, count in cand_counts.items())
        if correct > 0:
            p = correct / guess
        elif n >= 2:
            p = (correct + 1) / (guess + 1)
        else:
            p = _UNIGRAM_FLOOR / max(guess, 1)
        log_sum += math.log(p)
    score = math.exp(log_sum / MAX_NGRAM)

    ref_len = _closest_ref_len(len(candidate), [len(r) for r in references])
    if len(candidate) < ref_len:
        score *= math.exp(1.0 - ref_len / len(candidate))
    return score


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        ai = a[i - 1]
        for j in range(1, len(b) + 1):
            if ai == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[len(b)]


def rouge_l(candidate: list[str], reference: list[str], beta: float = ROUGE_BETA) -> float:
    """LCS-based F-measure with recall weighted by beta."""
    if not candidate or not reference:
        raise EmptyInput("candidate and reference must both have tokens")
    lcs = _lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    p = lcs / len(candidate)
    r = lcs / len(reference)
    return ((1 + beta**2) * p * r) / (r + beta**2 * p)


def cider_d(
    items: list[tuple[list[str], list[list[str]]]],
    sigma: float = CIDER_SIGMA,
) -> list[float]:
    """CIDEr-D over a corpus of (candidate, references) items.

    Document frequency of an n-gram is the number of items whose reference
    set contains it; idf = log(corpus size / df). Per reference: clipped
    cosine of tf-idf vectors times a Gaussian length penalty, averaged over
    references and n-gram orders, scaled by 10.
    """
    if len(items) < 2:
        raise CorpusTooSmall("CIDEr-D needs at least 2 corpus items")
    corpus_size = len(items)

    df: list[dict] = [defaultdict(int) for _ in range(MAX_NGRAM)]
    for _cand, refs in items:
        for n in range(1, MAX_NGRAM + 1):
            grams = set()
            for ref in refs:
                grams.update(_ngram_counts(ref, n).keys())
            for gram in grams:
                df[n - 1][gram] += 1

    def tfidf(tokens: list[str], n: int) -> tuple[dict, float]:
        vec = {}
        norm_sq = 0.0
        for gram, count in _ngram_counts(tokens, n).items():
            idf = math.log(corpus_size / df[n - 1][gram]) if df[n - 1][gram] > 0 else math.log(corpus_size)
            w = count * idf
            vec[gram] = w
            norm_sq += w * w
        return vec, math.sqrt(norm_sq)

    scores = []
    for cand, refs in items:
        per_n = []
        for n in range(1, MAX_NGRAM + 1):
            cand_vec, cand_norm = tfidf(cand, n)
            total = 0.0
            for ref in refs:
                ref_vec, ref_norm = tfidf(ref, n)
                num = sum(min(w, ref_vec.get(gram, 0.0)) * ref_vec.get(gram, 0.0)
                          for gram, w in cand_vec.items())
                sim = num / (cand_norm * ref_norm) if cand_norm > 0 and ref_norm > 0 else 0.0
                delta = len(cand) - len(ref)
                sim *= math.exp(-(delta * delta) / (2 * sigma * sigma))
                total += sim
            per_n.append(total / len(refs) if refs else 0.0)
        scores.append(10.0 * sum(per_n) / MAX_NGRAM)
    return scores


def score_pair(candidate_text: str, reference_text: str) -> dict[str, float]:
    """BLEU-4 and ROUGE-L for one raw text pair (CIDEr-D needs a corpus)."""
    cand = tokenize(candidate_text)
    ref = tokenize(reference_text)
    return {
        "bleu4": bleu4(cand, [ref]) if cand and ref else 0.0,
        "rouge_l": rouge_l(cand, ref) if cand and ref else 0.0,
    }
