"""Three-stage benchmark curation: duration filter, consensus filter,
stratified grid sampling over the valence-arousal plane.

The pipeline is deterministic and order-independent: records are sorted
before sampling, ties break on sample_id, so shuffled input manifests select
the same benchmark.
"""

from __future__ import annotations

from ..errors import MissingAnnotationStats, OutOfRange
from ..types import SampleRecord

MIN_DURATION_S = 3.0
MAX_DURATION_S = 8.0
MAX_RATING_STD = 1.5

GRID_SIZE = 10
SCALE_MIN = 1.0
SCALE_MAX = 7.0
_BIN_WIDTH = (SCALE_MAX - SCALE_MIN) / GRID_SIZE  # 0.6

DEFAULT_BIN_CAP = 15


def filter_duration(record: SampleRecord) -> bool:
    """Keep clips long enough to carry emotional content but short enough
    for stable captioning: 3.0 to 8.0 seconds, boundaries inclusive."""
    return MIN_DURATION_S <= record.duration_s <= MAX_DURATION_S


def filter_consensus(record: SampleRecord) -> bool:
    """Keep records whose valence and arousal rating stds are both <= 1.5."""
    if record.valence_std is None or record.arousal_std is None:
        raise MissingAnnotationStats(
            f"sample {record.sample_id} lacks valence/arousal stds"
        )
    return record.valence_std <= MAX_RATING_STD and record.arousal_std <= MAX_RATING_STD


def assign_bin(valence_mean: float, arousal_mean: float) -> tuple[int, int]:
    """Grid cell of a (valence, arousal) mean pair on the 10x10 grid.

    Bin index is floor((x - 1) / 0.6) per axis, clamped so the top of the
    scale lands in bin 9 instead of an eleventh bin.
    """
    cell = []
    for x in (valence_mean, arousal_mean):
        if not (SCALE_MIN <= x <= SCALE_MAX):
            raise OutOfRange(f"mean {x} outside [{SCALE_MIN}, {SCALE_MAX}]")
        cell.append(min(int((x - SCALE_MIN) // _BIN_WIDTH), GRID_SIZE - 1))
    return cell[0], cell[1]


def stratified_sample(records: list[SampleRecord], cap: int = DEFAULT_BIN_CAP) -> list[SampleRecord]:
    """Select up to ``cap`` records per grid cell, best consensus first.

    Within a cell, records sort ascending by combined rating std
    (valence + arousal), tie-breaking on sample_id; the output is ordered by
    cell then rank, independent of input order.
    """
    bins: dict[tuple[int, int], list[SampleRecord]] = {}
    for record in records:
        bins.setdefault(assign_bin(record.valence_mean, record.arousal_mean), []).append(record)
    selected: list[SampleRecord] = []
    for cell in sorted(bins):
        members = sorted(
            bins[cell],
            key=lambda r: ((r.valence_std or 0.0) + (r.arousal_std or 0.0), r.sample_id),
        )
        selected.extend(members[:cap])
    return selected


def bin_counts(records: list[SampleRecord]) -> dict[tuple[int, int], int]:
    """Occupancy of each grid cell among the given records."""
    counts: dict[tuple[int, int], int] = {}
    for record in records:
        cell = assign_bin(record.valence_mean, record.arousal_mean)
        counts[cell] = counts.get(cell, 0) + 1
    return counts


def curate(
    records: list[SampleRecord],
    cap: int = DEFAULT_BIN_CAP,
) -> tuple[list[SampleRecord], list[tuple[SampleRecord, str]]]:
    """Full curation chain; returns (selected, rejected-with-reason)."""
    rejects: list[tuple[SampleRecord, str]] = []
    survivors: list[SampleRecord] = []
    for record in records:
        if not filter_duration(record):
            rejects.append((record, f"duration {record.duration_s}s outside [3, 8]"))
            continue
        try:
            keep = filter_consensus(record)
        except MissingAnnotationStats:
            rejects.append((record, "missing valence/arousal stds"))
            continue
        if not keep:
            rejects.append((record, "rating std above 1.5"))
            continue
        try:
            assign_bin(record.valence_mean, record.arousal_mean)
        except OutOfRange as exc:
            rejects.append((record, str(exc)))
            continue
        survivors.append(record)
    selected = stratified_sample(survivors, cap=cap)
    kept_ids = {r.sample_id for r in selected}
    for record in survivors:
        if record.sample_id not in kept_ids:
            rejects.append((record, "bin cap reached"))
    return selected, rejects
