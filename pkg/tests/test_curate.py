"""Curation filters, grid binning, stratified sampling determinism."""

import random

import pytest

from emosura.bench.curate import (
    assign_bin,
    bin_counts,
    curate,
    filter_consensus,
    filter_duration,
    stratified_sample,
)
from emosura.errors import MissingAnnotationStats, OutOfRange
from emosura.types import SampleRecord


def _record(sample_id="s", duration=5.0, v=(4.0, 0.5), a=(4.0, 0.5)):
    return SampleRecord(
        sample_id=sample_id, audio_path="x.wav", duration_s=duration,
        valence_mean=v[0], valence_std=v[1],
        arousal_mean=a[0], arousal_std=a[1],
        dominance_mean=4.0, reference_caption="cap",
    )


@pytest.mark.parametrize("duration,keep", [
    (2.9, False), (3.0, True), (5.5, True), (8.0, True), (8.1, False),
])
def test_duration_filter_boundaries(duration, keep):
    assert filter_duration(_record(duration=duration)) is keep


@pytest.mark.parametrize("stds,keep", [
    ((1.5, 1.5), True), ((1.6, 0.4), False), ((0.4, 1.6), False), ((0.0, 0.0), True),
])
def test_consensus_filter(stds, keep):
    record = _record(v=(4.0, stds[0]), a=(4.0, stds[1]))
    assert filter_consensus(record) is keep


def test_consensus_filter_requires_stds():
    record = _record()
    record.valence_std = None
    with pytest.raises(MissingAnnotationStats):
        filter_consensus(record)


@pytest.mark.parametrize("means,cell", [
    ((1.0, 1.0), (0, 0)),
    ((7.0, 7.0), (9, 9)),
    ((4.0, 2.5), (5, 2)),
    ((1.59, 1.61), (0, 1)),
])
def test_bin_assignment(means, cell):
    assert assign_bin(*means) == cell


def test_bin_assignment_out_of_range():
    with pytest.raises(OutOfRange):
        assign_bin(0.5, 4.0)
    with pytest.raises(OutOfRange):
        assign_bin(4.0, 7.5)


def test_stratified_sample_caps_and_prefers_consensus():
    # 20 records in one cell with distinct combined stds.
    records = [
        _record(sample_id=f"s{i:02d}", v=(4.0, 0.01 * i), a=(4.0, 0.02 * i))
        for i in range(20)
    ]
    selected = stratified_sample(records, cap=15)
    assert len(selected) == 15
    assert [r.sample_id for r in selected] == [f"s{i:02d}" for i in range(15)]


def test_stratified_sample_under_cap_keeps_all():
    records = [_record(sample_id=f"u{i}") for i in range(3)]
    assert len(stratified_sample(records, cap=15)) == 3


def test_stratified_sample_tie_breaks_on_sample_id():
    records = [
        _record(sample_id="zz", v=(4.0, 0.3), a=(4.0, 0.3)),
        _record(sample_id="aa", v=(4.0, 0.3), a=(4.0, 0.3)),
    ]
    selected = stratified_sample(records, cap=1)
    assert [r.sample_id for r in selected] == ["aa"]


def _synthetic_manifest(n=2000, seed=13):
    rng = random.Random(seed)
    records = []
    for i in range(n):
        records.append(_record(
            sample_id=f"r{i:05d}",
            duration=rng.uniform(1.0, 10.0),
            v=(rng.uniform(1.0, 7.0), rng.uniform(0.0, 2.5)),
            a=(rng.uniform(1.0, 7.0), rng.uniform(0.0, 2.5)),
        ))
    return records


def test_curate_chain_invariants_and_shuffle_independence():
    records = _synthetic_manifest()
    selected, rejects = curate(records, cap=15)
    for record in selected:
        assert 3.0 <= record.duration_s <= 8.0
        assert record.valence_std <= 1.5 and record.arousal_std <= 1.5
    counts = bin_counts(selected)
    assert all(count <= 15 for count in counts.values())
    assert len(selected) + len(rejects) == len(records)

    shuffled = list(records)
    random.Random(99).shuffle(shuffled)
    selected2, _rejects2 = curate(shuffled, cap=15)
    assert [r.sample_id for r in selected2] == [r.sample_id for r in selected]


def test_curate_routes_missing_stats_to_rejects():
    good = _record(sample_id="ok")
    bad = _record(sample_id="nostd")
    bad.valence_std = None
    selected, rejects = curate([good, bad])
    assert [r.sample_id for r in selected] == ["ok"]
    assert any(r.sample_id == "nostd" and "missing" in reason for r, reason in rejects)
