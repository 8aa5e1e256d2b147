"""Scoring engine: worked examples, invariants, exact-rational oracle."""

import itertools
import random
from fractions import Fraction

import pytest

from emosura.scoring import (
    breakdown_from_counts,
    emosura_final,
    f1,
    is_descriptive,
    precision_score,
    recall_score,
    score_caption,
)
from emosura.types import (
    APU,
    APUSet,
    DEFAULT_DESCRIPTIVE_ATTRIBUTES,
    GENERATED,
    MatchResult,
    REFERENCE,
    ScoreBreakdown,
    Verdict,
    VerificationResult,
    YES,
    NO,
)


def test_precision_examples():
    assert precision_score(3, 4) == 0.75
    assert precision_score(0, 0) == 0.0
    assert precision_score(5, 5) == 1.0


def test_precision_rejects_inconsistent_counts():
    with pytest.raises(ValueError):
        precision_score(5, 4)
    with pytest.raises(ValueError):
        precision_score(-1, 4)


def test_recall_examples():
    assert recall_score(4, 5, 2) == pytest.approx(6 / 7, abs=1e-12)
    assert recall_score(3, 3, 0) == 1.0
    assert recall_score(0, 3, 0) == 0.0
    assert recall_score(0, 0, 0) == 0.0


def test_f1_examples():
    assert f1(3 / 4, 6 / 7) == pytest.approx(0.8, abs=1e-12)
    assert f1(0.0, 0.0) == 0.0
    assert f1(1.0, 1.0) == 1.0


def test_final_examples():
    a = ScoreBreakdown(1, 1, 0.8, scope="all")
    d = ScoreBreakdown(1, 1, 0.6, scope="descriptive")
    assert emosura_final(a, d).final == pytest.approx(0.7, abs=0)
    e = ScoreBreakdown(1, 1, 0.5)
    assert emosura_final(e, e).final == 0.5
    z = ScoreBreakdown(0, 0, 0.0)
    assert emosura_final(z, z).final == 0.0


def _apu(attr, ident="g1"):
    return APU(fact=f"The {attr} is x.", attribute=attr, value="x",
               evidence="", identifier=ident)


def test_is_descriptive_default_set():
    assert is_descriptive(_apu("pitch"))
    assert not is_descriptive(_apu("gender"))
    assert not is_descriptive(_apu("pitch"), frozenset())


def test_scores_bounded_and_monotone():
    rng = random.Random(7)
    for _ in range(500):
        total = rng.randint(0, 10)
        verified = rng.randint(0, total) if total else 0
        o = rng.randint(0, 10)
        q = rng.randint(0, o) if o else 0
        extra = rng.randint(0, verified) if verified else 0
        b = breakdown_from_counts(total, verified, o, q, extra)
        assert 0.0 <= b.precision <= 1.0
        assert 0.0 <= b.recall <= 1.0
        assert 0.0 <= b.f_score <= 1.0
        # Monotonicity in the verified count.
        if verified < total:
            assert precision_score(verified + 1, total) >= b.precision
        # Monotonicity in the matched count.
        if q < o:
            assert recall_score(q + 1, o, extra) >= b.recall


def test_extra_unit_strictly_increases_recall_below_full_coverage():
    for o in range(1, 7):
        for q in range(0, o):
            for extra in range(0, 5):
                assert recall_score(q, o, extra + 1) > recall_score(q, o, extra)


def test_harmonic_mean_between_min_and_max():
    rng = random.Random(11)
    for _ in range(300):
        p = rng.random()
        r = rng.random()
        s = f1(p, r)
        assert min(p, r) - 1e-12 <= s <= max(p, r) + 1e-12


def exact_scores(total, verified, o, q, extra):
    """Direct transcription of the scoring formulas in exact rationals."""
    s_p = Fraction(verified, total) if total else Fraction(0)
    denom = o + extra
    s_r = Fraction(q + extra, denom) if denom else Fraction(0)
    s_f = 2 * s_p * s_r / (s_p + s_r) if (s_p + s_r) else Fraction(0)
    return s_p, s_r, s_f


def test_rational_oracle_equivalence_small():
    for total in range(0, 7):
        for verified in range(0, total + 1):
            for o in range(0, 7):
                for q in range(0, min(o, total) + 1):
                    for extra in range(0, verified + 1):
                        s_p, s_r, s_f = exact_scores(total, verified, o, q, extra)
                        b = breakdown_from_counts(total, verified, o, q, extra)
                        assert abs(b.precision - float(s_p)) < 1e-12
                        assert abs(b.recall - float(s_r)) < 1e-12
                        assert abs(b.f_score - float(s_f)) < 1e-12


def _make_sets(n_gen, n_ref):
    gen = APUSet(
        caption_id="c", origin=GENERATED,
        units=tuple(
            APU(fact=f"Fact {i}.", attribute="emotion", value=f"v{i}",
                evidence="", identifier=f"g{i+1}")
            for i in range(n_gen)
        ),
    )
    ref = APUSet(
        caption_id="c::ref", origin=REFERENCE,
        units=tuple(
            APU(fact=f"Ref {j}.", attribute="emotion", value=f"v{j}",
                evidence="", identifier=f"r{j+1}")
            for j in range(n_ref)
        ),
    )
    return gen, ref


def test_permuting_apu_order_never_changes_scores():
    rng = random.Random(3)
    gen, ref = _make_sets(5, 4)
    verdicts = tuple(
        Verdict(apu_id=u.identifier, decision=YES if i % 2 == 0 else NO)
        for i, u in enumerate(gen.units)
    )
    verification = VerificationResult(apu_set_ref="c", verdicts=verdicts)
    pairs = (("g1", "r1"), ("g2", "r2"), ("g3", None), ("g4", None), ("g5", "r1"))
    match = MatchResult(pairs=pairs,
                        matched_oracle_ids=frozenset({"r1", "r2"}),
                        extra_verified_ids=frozenset({"g3", "g5"}) & verification.verified_ids)
    baseline = score_caption(gen, ref, verification, match)
    for _ in range(10):
        gen_units = list(gen.units)
        ref_units = list(ref.units)
        rng.shuffle(gen_units)
        rng.shuffle(ref_units)
        gen2 = APUSet(caption_id="c", origin=GENERATED, units=tuple(gen_units))
        ref2 = APUSet(caption_id="c::ref", origin=REFERENCE, units=tuple(ref_units))
        verification2 = VerificationResult(
            apu_set_ref="c", verdicts=tuple(sorted(verdicts, key=lambda v: rng.random()))
        )
        shuffled_pairs = list(pairs)
        rng.shuffle(shuffled_pairs)
        match2 = MatchResult(pairs=tuple(shuffled_pairs),
                             matched_oracle_ids=match.matched_oracle_ids,
                             extra_verified_ids=match.extra_verified_ids)
        again = score_caption(gen2, ref2, verification2, match2)
        assert again.all_units == baseline.all_units
        assert again.descriptive == baseline.descriptive
        assert again.final == baseline.final


def test_descriptive_scope_filters_each_population():
    gen = APUSet(
        caption_id="c", origin=GENERATED,
        units=(
            APU("The speaker's gender is male.", "gender", "male", "", "g1"),
            APU("The pitch of the voice is low.", "pitch", "low", "", "g2"),
            APU("The speaker's emotion is sad.", "emotion", "sad", "", "g3"),
        ),
    )
    ref = APUSet(
        caption_id="c::ref", origin=REFERENCE,
        units=(
            APU("The speaker's gender is male.", "gender", "male", "", "r1"),
            APU("The pitch of the voice is low.", "pitch", "low", "", "r2"),
        ),
    )
    verification = VerificationResult(
        apu_set_ref="c",
        verdicts=(Verdict("g1", YES), Verdict("g2", YES), Verdict("g3", YES)),
    )
    match = MatchResult(
        pairs=(("g1", "r1"), ("g2", "r2"), ("g3", None)),
        matched_oracle_ids=frozenset({"r1", "r2"}),
        extra_verified_ids=frozenset({"g3"}),
    )
    score = score_caption(gen, ref, verification, match)
    # All scope: 3/3 verified; (2 + 1) / (2 + 1) recall.
    assert score.all_units.precision == 1.0
    assert score.all_units.recall == 1.0
    # Descriptive scope drops the gender units on both sides.
    assert score.descriptive.precision == 1.0
    assert score.descriptive.recall == pytest.approx((1 + 1) / (1 + 1))
    # Filtering never increases counts: check via a gender-only restriction.
    gender_only = score_caption(gen, ref, verification, match,
                                descriptive_attributes=frozenset({"gender"}))
    assert gender_only.descriptive.recall == pytest.approx(1 / 1)


def test_zero_when_degenerate_generated_set():
    gen = APUSet(caption_id="c", origin=GENERATED, units=(), format_failed=True)
    _unused, ref = _make_sets(0, 3)
    verification = VerificationResult(apu_set_ref="c", verdicts=())
    match = MatchResult(pairs=(), matched_oracle_ids=frozenset(),
                        extra_verified_ids=frozenset())
    score = score_caption(gen, ref, verification, match)
    assert score.all_units.precision == 0.0
    assert score.all_units.recall == 0.0
    assert score.all_units.f_score == 0.0
    assert score.final == 0.0
