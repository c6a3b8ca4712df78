"""Fair-coin and tree adversaries: structure, sampling laws, moments."""

import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from pls import (
    BernoulliBlockSampler,
    BlockRepresentation,
    StreamError,
    TreeSample,
    bernoulli_block_model,
    build_tree,
    conditional_variance_check,
    family,
    find_technical_edge,
    render_sequence,
    sample_bernoulli_sequence,
    sample_tree_leaf_means,
    sample_tree_node_values,
    sample_tree_values,
    tree_model_moments,
)


class TestBernoulliModel:
    def test_single_block(self):
        model = bernoulli_block_model(1)
        assert model.mean.tolist() == [Fraction(1, 2)]
        assert model.second_moment.tolist() == [[Fraction(1, 2)]]

    def test_two_blocks(self):
        model = bernoulli_block_model(2)
        assert model.second_moment.tolist() == [
            [Fraction(1, 2), Fraction(1, 4)],
            [Fraction(1, 4), Fraction(1, 2)],
        ]

    def test_covariance_is_quarter_identity(self):
        model = bernoulli_block_model(5)
        assert np.allclose(model.covariance(), np.eye(5) / 4)
        model.validate()

    def test_matches_enumeration_of_bit_pairs(self):
        # brute force over the 4 equally likely bit pairs
        model = bernoulli_block_model(2)
        pairs = [(a, b) for a in (0, 1) for b in (0, 1)]
        e_prod = Fraction(sum(a * b for a, b in pairs), 4)
        e_sq = Fraction(sum(a * a for a, _ in pairs), 4)
        assert model.second_moment[0][1] == e_prod
        assert model.second_moment[0][0] == e_sq


class TestBernoulliSampler:
    def test_support_and_frequencies(self):
        b = BlockRepresentation((2, 1))
        rng = np.random.default_rng(0)
        counts = Counter()
        trials = 20_000
        for _ in range(trials):
            x = sample_bernoulli_sequence(b, rng)
            counts[tuple(x.tolist())] += 1
        support = {(0, 0, 0), (0, 0, 1), (1, 1, 0), (1, 1, 1)}
        assert set(counts) == {tuple(float(v) for v in s) for s in support}
        sigma = math.sqrt(0.25 * 0.75 / trials)
        for key in counts:
            assert abs(counts[key] / trials - 0.25) <= 4 * sigma

    def test_block_constancy_and_mean(self, corpus):
        rng = np.random.default_rng(1)
        bits = []
        for b in corpus[:10]:
            x = sample_bernoulli_sequence(b, rng)
            assert x.shape == (b.n,)
            pos = b.origin
            for l in b.lengths:
                block = x[pos : pos + l]
                assert block.min() == block.max()
                bits.append(block[0])
                pos += l
        # pooled block bits are fair within 4 sigma
        n = len(bits)
        assert abs(np.mean(bits) - 0.5) <= 4 * math.sqrt(0.25 / n)

    def test_fair_bit_mean_at_scale(self):
        b = BlockRepresentation((2, 1))
        rng = np.random.default_rng(2)
        samples = 100_000
        total = sum(sample_bernoulli_sequence(b, rng)[2] for _ in range(samples))
        assert abs(total / samples - 0.5) <= 4 * math.sqrt(0.25 / samples)

    def test_origin_prefix_is_zero(self):
        b = BlockRepresentation((1, 2), origin=3)
        x = sample_bernoulli_sequence(b, np.random.default_rng(3))
        assert x[:3].tolist() == [0, 0, 0]


class TestTreeConstruction:
    def test_dominant_block_gives_ternary_root(self):
        tree = build_tree(BlockRepresentation((1, 5, 1)))
        kids = [(c.lo, c.hi, c.is_leaf) for c in tree.root.children]
        assert kids == [(1, 1, True), (2, 2, True), (3, 3, True)]

    def test_quarter_split_on_uniform_blocks(self):
        tree = build_tree(family("ones", m=4))
        assert [(c.lo, c.hi) for c in tree.root.children] == [(1, 1), (2, 4)]
        right = tree.root.children[1]
        assert [(c.lo, c.hi) for c in right.children] == [(2, 2), (3, 4)]

    def test_boundary_dominant_block(self):
        tree = build_tree(BlockRepresentation((5, 1)))
        assert [(c.lo, c.hi) for c in tree.root.children] == [(1, 1), (2, 2)]
        tree.validate()

    def test_sigma_formula(self):
        tree = build_tree(family("ones", m=4))
        node = next(n for n in tree.nodes if n.size == 2)
        assert node.sigma == pytest.approx(math.sqrt(1 - math.log(2) / math.log(4)), abs=1e-15)
        assert tree.root.sigma == 0.0
        assert all(leaf.sigma == 1.0 for leaf in tree.leaves)

    def test_single_block_rejected(self):
        with pytest.raises(ValueError):
            build_tree(BlockRepresentation((7,)))

    def test_structural_invariants_on_corpus(self, tree_corpus):
        for b in tree_corpus:
            tree = build_tree(b)
            tree.validate()
            assert len(tree.leaves) == b.m
            assert [leaf.lo for leaf in tree.leaves] == list(range(1, b.m + 1))


class TestTreeSampling:
    def test_root_value_and_two_point_support(self, tree_corpus):
        rng = np.random.default_rng(4)
        for b in tree_corpus[:12]:
            tree = build_tree(b)
            for _ in range(5):
                s = sample_tree_values(tree, rng)
                assert s.node_values[tree.root.index] == 0.5
                for node in tree.nodes:
                    v = s.node_values[node.index]
                    assert v in (node.high_value, node.low_value)
                    assert abs(v - 0.5) == node.deviation()

    def test_leaf_values_are_bits(self):
        tree = build_tree(family("ones", m=8))
        s = sample_tree_values(tree, np.random.default_rng(5))
        assert set(np.unique(s.block_means)) <= {0.0, 1.0}

    def test_skewed_parent_probability(self):
        # a parent at 1/4 must put probability 1/4 on the high child value
        # when the child deviation is 1/2 (sigma = 1)
        trials = 200_000
        rng = np.random.default_rng(6)
        tree = build_tree(family("ones", m=4))
        # find an edge leaf->parent where parent can sit below 1/2
        values = sample_tree_node_values(tree, trials, rng)
        leaf = tree.leaves[2]
        parent = leaf.parent
        mask = np.isclose(values[parent.index], parent.low_value)
        p_emp = np.mean(np.isclose(values[leaf.index][mask], 1.0))
        p_expected = (parent.low_value - 0.0) / 1.0
        sigma = math.sqrt(p_expected * (1 - p_expected) / mask.sum())
        assert abs(p_emp - p_expected) <= 4 * sigma

    def test_martingale_property_per_edge(self, tree_corpus):
        samples = 100_000
        rng = np.random.default_rng(7)
        for b in tree_corpus[:6]:
            tree = build_tree(b)
            values = sample_tree_node_values(tree, samples, rng)
            for parent, child in tree.edges():
                child_vals = values[child.index]
                for a in {parent.high_value, parent.low_value}:
                    mask = values[parent.index] == a
                    if mask.sum() < 100:
                        continue
                    emp = child_vals[mask].mean()
                    se = child_vals[mask].std(ddof=1) / math.sqrt(mask.sum())
                    assert abs(emp - a) <= 4 * max(se, 1e-12)

    def test_batch_matches_scalar_law(self):
        tree = build_tree(BlockRepresentation((1, 5, 1, 2)))
        rng = np.random.default_rng(8)
        batch = sample_tree_leaf_means(tree, 50_000, rng)
        scalar = np.array([
            sample_tree_values(tree, rng).block_means for _ in range(50_000)
        ])
        for col in range(tree.m):
            assert abs(batch[:, col].mean() - scalar[:, col].mean()) <= 4 * math.sqrt(
                2 * 0.25 / 50_000
            )


class TestTreeMoments:
    def test_leaf_second_moment(self, tree_corpus):
        for b in tree_corpus[:10]:
            model = tree_model_moments(build_tree(b))
            assert np.allclose(np.diag(model.second_moment), 0.5)
            model.validate()

    def test_root_lca_pairs_uncorrelated(self):
        tree = build_tree(family("ones", m=4))
        model = tree_model_moments(tree)
        # blocks 1 and 4 meet at the root: sigma = 0
        assert model.second_moment[0, 3] == pytest.approx(0.25, abs=1e-15)

    def test_small_lca_closed_form(self):
        tree = build_tree(family("ones", m=4))
        model = tree_model_moments(tree)
        assert model.second_moment[2, 3] == pytest.approx(0.375, abs=1e-15)

    def test_lca_lookup_agrees_with_matrix(self, tree_corpus):
        for b in tree_corpus[:8]:
            tree = build_tree(b)
            model = tree_model_moments(tree)
            for r in range(1, b.m + 1):
                for s in range(1, b.m + 1):
                    if r == s:
                        continue
                    node = tree.lca(r, s)
                    expect = 0.25 + 0.25 * node.sigma ** 2
                    assert model.second_moment[r - 1, s - 1] == pytest.approx(expect, abs=1e-15)

    def test_monte_carlo_gate_small(self):
        # the closed form is only trusted against sampling; a smaller copy
        # of the acceptance-scale gate
        samples = 200_000
        rng = np.random.default_rng(9)
        for b in (family("ones", m=4), BlockRepresentation((1, 5, 1, 2))):
            tree = build_tree(b)
            model = tree_model_moments(tree)
            means = sample_tree_leaf_means(tree, samples, rng)
            for r in range(b.m):
                for s in range(b.m):
                    prod = means[:, r] * means[:, s]
                    se = prod.std(ddof=1) / math.sqrt(samples)
                    assert abs(prod.mean() - model.second_moment[r, s]) <= 4 * max(se, 1e-12)


class TestConditionalVariance:
    def test_two_block_value(self):
        report = conditional_variance_check(build_tree(family("ones", m=2)))
        assert report.edges[0].formula == pytest.approx(0.25, abs=1e-15)
        assert report.max_deviation <= 1e-12

    def test_uniform_four_named_edge(self):
        tree = build_tree(family("ones", m=4))
        report = conditional_variance_check(tree)
        by_child = {c.child_interval: c for c in report.edges}
        got = by_child[(2, 4)].formula
        assert got == pytest.approx((math.log(4) - math.log(3)) / (4 * math.log(4)), abs=1e-15)

    def test_realisation_independence_and_tolerance(self, tree_corpus):
        for b in tree_corpus:
            report = conditional_variance_check(build_tree(b))
            assert report.max_deviation <= 1e-12
            assert report.max_realisation_gap <= 1e-12


class TestTechnicalEdge:
    @staticmethod
    def _check(tree, b, i, j):
        u, v = find_technical_edge(tree, i, j)
        assert v.parent is u
        assert v.lo >= i  # disjoint from 1..i-1
        prefix = [0]
        for l in b.lengths:
            prefix.append(prefix[-1] + l)
        window = prefix[j] - prefix[i - 1]
        assert 32 * v.totlen >= window
        assert 2 * v.size <= u.size

    def test_singleton_interval_uses_leaf_edge(self, tree_corpus):
        for b in tree_corpus[:10]:
            tree = build_tree(b)
            for i in range(1, b.m + 1):
                u, v = find_technical_edge(tree, i, i)
                self._check(tree, b, i, i)

    def test_descend_example(self):
        tree = build_tree(family("ones", m=4))
        u, v = find_technical_edge(tree, 1, 4)
        # the root edge to {2,3,4} fails size halving, so the search descends
        assert (v.lo, v.hi) != (2, 4)
        self._check(tree, family("ones", m=4), 1, 4)

    def test_exhaustive_small(self, tree_corpus):
        for b in tree_corpus:
            if b.m > 16:
                continue
            tree = build_tree(b)
            for i in range(1, b.m + 1):
                for j in range(i, b.m + 1):
                    self._check(tree, b, i, j)


class TestRendering:
    def test_example(self):
        b = BlockRepresentation((2, 1))
        sample = TreeSample(np.array([0.5, 0.0, 1.0]), np.array([0.0, 1.0]))
        assert render_sequence(b, sample).tolist() == [0.0, 0.0, 1.0]

    def test_length_and_shape_mismatch(self, tree_corpus):
        for b in tree_corpus[:6]:
            tree = build_tree(b)
            s = sample_tree_values(tree, np.random.default_rng(10))
            assert render_sequence(b, s).shape == (b.n,)
        with pytest.raises(ValueError):
            render_sequence(
                BlockRepresentation((1, 1, 1)),
                TreeSample(np.array([0.5]), np.array([0.0, 1.0])),
            )


class TestLazyBernoulliStream:
    def test_window_mean_distribution_matches_dense(self):
        b = BlockRepresentation((2, 1))
        sampler = BernoulliBlockSampler(b)
        rng = np.random.default_rng(11)
        trials = 40_000
        lazy = Counter(
            round(sampler.stream(rng).target_mean(0, 3), 6) for _ in range(trials)
        )
        dense = Counter(
            round(float(sample_bernoulli_sequence(b, rng).mean()), 6)
            for _ in range(trials)
        )
        assert set(lazy) == set(dense)
        for key in lazy:
            p = dense[key] / trials
            sigma = math.sqrt(p * (1 - p) / trials)
            assert abs(lazy[key] / trials - p) <= 6 * sigma

    def test_alignment_required(self):
        sampler = BernoulliBlockSampler(BlockRepresentation((2, 3)))
        stream = sampler.stream(np.random.default_rng(0))
        with pytest.raises(StreamError):
            stream.read_mean(1)  # splits the first block

    def test_no_resampling_of_consumed_windows(self):
        sampler = BernoulliBlockSampler(BlockRepresentation((2, 3)))
        stream = sampler.stream(np.random.default_rng(0))
        stream.read_mean(5)
        with pytest.raises(StreamError):
            stream.target_mean(0, 5)

    def test_origin_prefix_rules(self):
        sampler = BernoulliBlockSampler(BlockRepresentation((2, 3), origin=2))
        stream = sampler.stream(np.random.default_rng(0))
        with pytest.raises(StreamError):
            stream.target_mean(0, 2)
        stream.skip(2)
        value = stream.read_mean(2)
        assert value in (0.0, 1.0)
