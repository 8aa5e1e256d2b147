"""Correlation coefficients and distribution statistics.

Pearson, tie-corrected Kendall tau-b and mid-rank Spearman, plus caption
length statistics. Implementations are vectorized numpy; the test suite pins
them against naive direct-formula oracles.
"""

from __future__ import annotations

import numpy as np
from scipy.special import stdtr

from .errors import AllTied, EmptyList, LengthMismatch, ZeroVariance


def _paired(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"need equal-length 1-d vectors, got {x.shape} vs {y.shape}")
    if x.size < 2:
        raise LengthMismatch("need at least 2 points")
    return x, y


def pearson(x, y) -> float:
    """Product-moment correlation."""
    x, y = _paired(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt((dx * dx).sum()))
    sy = float(np.sqrt((dy * dy).sum()))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("correlation undefined for a constant input")
    return float((dx * dy).sum() / (sx * sy))


def pearson_pvalue(x, y) -> tuple[float, float]:
    """Pearson r with a two-sided p-value from the t approximation."""
    x, y = _paired(x, y)
    r = pearson(x, y)
    n = x.size
    if n < 3 or abs(r) >= 1.0:
        return r, 0.0
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(stdtr(n - 2, -abs(t)))
    return r, p


def kendall_tau(x, y) -> float:
    """Tie-corrected Kendall tau-b by all-pairs enumeration."""
    x, y = _paired(x, y)
    # Sign matrices over all i<j pairs.
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    upper = np.triu_indices(x.size, k=1)
    sx = dx[upper]
    sy = dy[upper]
    concordant = int(np.sum((sx * sy) > 0))
    discordant = int(np.sum((sx * sy) < 0))
    tied_x_only = int(np.sum((sx == 0) & (sy != 0)))
    tied_y_only = int(np.sum((sy == 0) & (sx != 0)))
    denom_x = concordant + discordant + tied_x_only
    denom_y = concordant + discordant + tied_y_only
    if denom_x == 0 or denom_y == 0:
        raise AllTied("tau-b undefined when one ranking is fully tied")
    return (concordant - discordant) / np.sqrt(denom_x * denom_y)


def midranks(x) -> np.ndarray:
    """Average ranks (1-based), ties sharing their mid-rank."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=float)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Rank correlation: Pearson over mid-ranks."""
    x, y = _paired(x, y)
    return pearson(midranks(x), midranks(y))


def samplewise_tau(per_sample_vectors: list[tuple[list[float], list[float]]]) -> float:
    """Mean Kendall tau-b computed per sample across systems.

    Samples whose tau is undefined (fully tied on either side) are skipped;
    raises AllTied when no sample contributes.
    """
    taus = []
    for x, y in per_sample_vectors:
        try:
            taus.append(kendall_tau(x, y))
        except (AllTied, LengthMismatch):
            continue
    if not taus:
        raise AllTied("no sample produced a defined tau")
    return float(np.mean(taus))


def length_stats(captions: list[str]) -> tuple[float, float, int]:
    """(mean, population std, max) of caption character counts."""
    if not captions:
        raise EmptyList("need at least one caption")
    lengths = np.array([len(c) for c in captions], dtype=float)
    return float(lengths.mean()), float(lengths.std()), int(lengths.max())
