"""Instance encodings, approximate uniformity, merges, and named families."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pls import (
    BlockRepresentation,
    MergePlan,
    StoppingTimeSet,
    approximate_uniformity,
    approximate_uniformity_bruteforce,
    family,
    from_blocks,
    greedy_merge,
    instance_from_json,
    instance_to_json,
    to_blocks,
)
from pls.instance import infer_separation_params, separation_lengths


class TestConversions:
    def test_fully_selective(self):
        b = to_blocks(StoppingTimeSet(6, tuple(range(6))))
        assert b.lengths == (1, 1, 1, 1, 1, 1)
        assert b.origin == 0

    def test_gaps(self):
        b = to_blocks(StoppingTimeSet(7, (0, 1, 3)))
        assert b.lengths == (1, 2, 4)
        assert b.origin == 0

    def test_shifted(self):
        b = to_blocks(StoppingTimeSet(7, (2, 3)))
        assert b.lengths == (1, 4)
        assert b.origin == 2

    def test_from_blocks(self):
        assert from_blocks(BlockRepresentation((1, 2, 4))) == StoppingTimeSet(7, (0, 1, 3))
        assert from_blocks(BlockRepresentation((5,))) == StoppingTimeSet(5, (0,))
        assert from_blocks(BlockRepresentation((1, 4), origin=2)) == StoppingTimeSet(7, (2, 3))

    def test_round_trip_corpus(self, corpus):
        for b in corpus:
            assert to_blocks(from_blocks(b)) == b
            ts = from_blocks(b)
            assert from_blocks(to_blocks(ts)) == ts

    @given(
        lengths=st.lists(st.integers(1, 9), min_size=1, max_size=12),
        origin=st.integers(0, 5),
    )
    @settings(deadline=None, max_examples=200)
    def test_round_trip_property(self, lengths, origin):
        b = BlockRepresentation(tuple(lengths), origin=origin)
        assert to_blocks(from_blocks(b)) == b

    def test_rejects_empty_and_invalid(self):
        with pytest.raises(ValueError):
            StoppingTimeSet(5, ())
        with pytest.raises(ValueError):
            StoppingTimeSet(5, (0, 5))
        with pytest.raises(ValueError):
            StoppingTimeSet(5, (2, 1))
        with pytest.raises(ValueError):
            BlockRepresentation(())
        with pytest.raises(ValueError):
            BlockRepresentation((0, 1))


class TestApproximateUniformity:
    def test_all_ones(self):
        for m in (1, 3, 8, 17):
            uni = approximate_uniformity(family("ones", m=m))
            assert uni.value == m
            assert (uni.i, uni.j) == (1, m)

    def test_two_blocks(self):
        uni = approximate_uniformity(BlockRepresentation((5, 9)))
        assert uni.value == Fraction(14, 9)
        assert (uni.i, uni.j) == (1, 2)

    def test_geometric_exact(self):
        for m in range(1, 12):
            uni = approximate_uniformity(family("geometric", m=m))
            assert uni.value == 2 - Fraction(1, 2 ** (m - 1))

    def test_bruteforce_examples(self):
        assert approximate_uniformity_bruteforce(BlockRepresentation((1,))).value == 1
        assert approximate_uniformity_bruteforce(BlockRepresentation((1, 2, 3))).value == 2

    def test_bruteforce_guard(self):
        big = BlockRepresentation((1,) * (2 ** 14 + 1))
        with pytest.raises(ValueError):
            approximate_uniformity_bruteforce(big)

    def test_fast_equals_bruteforce_random(self):
        rng = np.random.default_rng(99)
        for _ in range(300):
            m = int(rng.integers(1, 65))
            b = BlockRepresentation(tuple(int(x) for x in rng.integers(1, 17, size=m)))
            fast = approximate_uniformity(b)
            brute = approximate_uniformity_bruteforce(b)
            assert fast.value == brute.value
            assert (fast.i, fast.j) == (brute.i, brute.j)

    def test_range_and_equality_characterisation(self, corpus):
        for b in corpus:
            uni = approximate_uniformity(b)
            assert 1 <= uni.value <= b.m
            all_equal = len(set(b.lengths)) == 1
            assert (uni.value == b.m) == all_equal


class TestGreedyMerge:
    def test_trace_increasing(self):
        plan = greedy_merge(BlockRepresentation((1, 2, 3, 4, 5, 6)), 2)
        assert plan.cut_indices == (1, 4, 6, 7)
        assert plan.merged_lengths == (6, 9, 6)

    def test_merge_plan_validity_example(self):
        # (5, 9) really is a merge of (1,2,3,4,5,6), witnessed by cuts (2,4,6)
        plan = MergePlan((2, 4, 6), (5, 9))
        plan.validate_against(BlockRepresentation((1, 2, 3, 4, 5, 6)))
        with pytest.raises(ValueError):
            MergePlan((2, 4, 6), (5, 8)).validate_against(
                BlockRepresentation((1, 2, 3, 4, 5, 6))
            )

    def test_all_ones(self):
        plan = greedy_merge(family("ones", m=8), 2)
        assert plan.merged_lengths == (1,) * 8
        assert plan.m >= 8 // 2

    def test_degenerate_single_block(self):
        plan = greedy_merge(BlockRepresentation((5,)), 1.01)
        assert plan.merged_lengths == (5,)

    @pytest.mark.parametrize("C", [1.5, 2, 4])
    def test_conclusions_on_corpus(self, corpus, C):
        for b in corpus:
            uni = approximate_uniformity(b)
            plan = greedy_merge(b, C)  # internal assertions re-check both bounds
            plan.validate_against(b)
            assert plan.m >= int((1 - 1 / Fraction(C)) * uni.value)
            assert max(plan.merged_lengths) <= Fraction(C) * min(plan.merged_lengths)

    def test_rejects_bad_ratio(self):
        with pytest.raises(ValueError):
            greedy_merge(family("ones", m=4), 1)


class TestFamilies:
    def test_cantor_unrolled(self):
        b = family("cantor", k=2)
        assert b.lengths == (1, 1, 1, 3, 1, 1, 1)
        assert b.n == 9 and b.m == 7

    def test_cantor_shape(self):
        for k in range(1, 7):
            b = family("cantor", k=k)
            assert b.n == 3 ** k
            assert b.m == 2 ** (k + 1) - 1

    def test_separation_unrolled(self):
        b = family("separation", k=2, h=2)
        assert b.lengths == (1, 1, 1, 1, 8, 1, 1, 1, 1)
        assert b.n == 16

    def test_separation_uniformity(self):
        for k in (2, 3, 4):
            for h in (1, 2, 3):
                b = family("separation", k=k, h=h)
                assert b.n == (2 * k) ** h
                assert approximate_uniformity(b).value == 2 * k

    def test_geometric_horizon(self):
        assert family("geometric", m=5).n == 2 ** 5 - 1

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            family("ones", m=0)
        with pytest.raises(ValueError):
            family("separation", k=1, h=2)
        with pytest.raises(ValueError):
            family("nope", m=3)

    def test_infer_separation_params(self):
        for k in (2, 3, 5, 8):
            for h in (1, 2, 3):
                b = BlockRepresentation(separation_lengths(k, h))
                assert infer_separation_params(b) == (k, h)
        assert infer_separation_params(BlockRepresentation((1, 2, 3))) is None
        # ones(2k) is exactly the depth-1 member
        assert infer_separation_params(family("ones", m=6)) == (3, 1)


class TestJson:
    def test_block_form_round_trip(self, tmp_path):
        b = BlockRepresentation((1, 4), origin=2)
        assert instance_from_json(instance_to_json(b)) == b

    def test_stopping_time_form(self):
        ts = StoppingTimeSet(7, (0, 1, 3))
        assert instance_from_json(instance_to_json(ts)) == to_blocks(ts)

    def test_bad_payloads(self):
        with pytest.raises(ValueError):
            instance_from_json("[1, 2]")
        with pytest.raises(ValueError):
            instance_from_json('{"n": 5}')
