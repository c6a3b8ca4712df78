"""Hard input distributions for PLS instances.

Two adversaries, each exposed both as a sampler and as exact first/second
moments of the per-block means:

* the independent fair-coin block adversary: every block is filled with a
  single bit drawn uniformly at random, independently across blocks;
* the tree adversary: a hierarchical decomposition of the blocks into a
  ternary/binary tree, with a martingale of node values whose deviation from
  1/2 is a deterministic function of the node.  Correlations between block
  means are controlled by the tree, which is what forces every forecaster
  into Omega(1/log m) error.

Moment models are plain (mean vector, second-moment matrix) pairs so the
evaluation code can score block-linear forecasters in closed form.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .instance import BlockRepresentation
from .streams import SequenceStream, StreamError


@dataclass(frozen=True, eq=False)
class BlockMeanModel:
    """First and second moments of a random block-mean vector in [0,1]^m.

    ``second_moment[r][s] = E[mu_r * mu_s]``.  Entries are exact fractions
    for the fair-coin adversary and floats for the tree adversary (whose
    moments involve logarithms).
    """

    mean: np.ndarray
    second_moment: np.ndarray

    def __post_init__(self):
        m = self.mean.shape[0]
        if self.second_moment.shape != (m, m):
            raise ValueError("second moment must be an m x m matrix")
        self.mean.setflags(write=False)
        self.second_moment.setflags(write=False)

    @property
    def m(self) -> int:
        return self.mean.shape[0]

    @property
    def is_exact(self) -> bool:
        return self.mean.dtype == object

    @cached_property
    def _integer_form(self) -> tuple[list[list[int]], int]:
        """Second moment as (integer matrix, common denominator); exact models only."""
        if not self.is_exact:
            raise TypeError("integer form is only defined for exact models")
        unique = set(self.second_moment.ravel().tolist())
        den = 1
        for value in unique:
            den = den * value.denominator // math.gcd(den, value.denominator)
        table = {value: int(value * den) for value in unique}
        rows = [[table[v] for v in row] for row in self.second_moment.tolist()]
        return rows, den

    def as_float(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.asarray(self.mean, dtype=float),
            np.asarray(self.second_moment, dtype=float),
        )

    def covariance(self) -> np.ndarray:
        mean, second = self.as_float()
        return second - np.outer(mean, mean)

    def validate(self, tol: float = 1e-9) -> None:
        """Structural checks: symmetry, diagonal range, PSD covariance."""
        mean, second = self.as_float()
        if not np.array_equal(second, second.T):
            raise ValueError("second moment matrix is not symmetric")
        diag = np.diag(second)
        if diag.min() < -tol or diag.max() > 1 + tol:
            raise ValueError("diagonal second moments must lie in [0, 1]")
        eigs = np.linalg.eigvalsh(second - np.outer(mean, mean))
        if eigs.min() < -tol:
            raise ValueError(f"covariance has negative eigenvalue {eigs.min()}")


def bernoulli_block_model(m: int) -> BlockMeanModel:
    """Exact moments of m independent fair-coin block means.

    E[mu_r] = 1/2, E[mu_r^2] = 1/2 (a bit squared is itself), and
    E[mu_r mu_s] = 1/4 off the diagonal.
    """
    if m < 1:
        raise ValueError("need at least one block")
    mean = np.full(m, Fraction(1, 2), dtype=object)
    second = np.full((m, m), Fraction(1, 4), dtype=object)
    np.fill_diagonal(second, Fraction(1, 2))
    return BlockMeanModel(mean, second)


def sample_bernoulli_block_means(b: BlockRepresentation, rng: np.random.Generator) -> np.ndarray:
    """Independent fair bits, one per block."""
    return rng.integers(0, 2, size=b.m).astype(float)


def sample_bernoulli_sequence(b: BlockRepresentation, rng: np.random.Generator) -> np.ndarray:
    """A full sequence from the fair-coin block adversary.

    Constant within each block; the prefix before the first stopping time
    (always observed, never predicted on) is filled with zeros.
    """
    bits = sample_bernoulli_block_means(b, rng)
    return render_block_means(b, bits)


def render_block_means(b: BlockRepresentation, means) -> np.ndarray:
    """Expand per-block values into a sequence of length n (zero prefix)."""
    means = np.asarray(means, dtype=float)
    if means.shape != (b.m,):
        raise ValueError(f"expected {b.m} block values, got shape {means.shape}")
    out = np.zeros(b.n)
    out[b.origin :] = np.repeat(means, b.lengths)
    return out


# --- tree adversary -------------------------------------------------------


class TreeNode:
    """One node of the adversary tree.

    ``lo``/``hi`` are 1-based inclusive block indices covered by the node's
    subtree; ``totlen`` their total length in timesteps.  ``high_value`` and
    ``low_value`` are the two values a node may take; they are symmetric
    around 1/2 by construction (``low = 1 - high`` exactly), with deviation
    ``sigma / 2``.
    """

    __slots__ = (
        "lo", "hi", "totlen", "children", "parent",
        "index", "depth", "sigma", "high_value", "low_value",
    )

    def __init__(self, lo: int, hi: int, totlen: int, children: tuple):
        self.lo = lo
        self.hi = hi
        self.totlen = totlen
        self.children = children
        self.parent = None
        self.index = -1
        self.depth = 0
        self.sigma = 0.0
        self.high_value = 0.5
        self.low_value = 0.5

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def deviation(self) -> float:
        return self.high_value - 0.5

    def __repr__(self):
        kind = "leaf" if self.is_leaf else f"{len(self.children)}-way"
        return f"TreeNode([{self.lo},{self.hi}] {kind} sigma={self.sigma:.4f})"


@dataclass(frozen=True, eq=False)
class AdversaryTree:
    """Hierarchical block decomposition with noise magnitudes."""

    root: TreeNode
    nodes: tuple[TreeNode, ...]      # preorder; parents precede children
    leaves: tuple[TreeNode, ...]     # leaves[i] corresponds to block i+1
    lengths: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.leaves)

    def edges(self):
        """All (parent, child) pairs, parents first."""
        for node in self.nodes:
            for child in node.children:
                yield node, child

    def lca(self, r: int, s: int) -> TreeNode:
        """Lowest common ancestor of the leaves for blocks r and s (1-based)."""
        u, v = self.leaves[r - 1], self.leaves[s - 1]
        while u.depth > v.depth:
            u = u.parent
        while v.depth > u.depth:
            v = v.parent
        while u is not v:
            u, v = u.parent, v.parent
        return u

    def deepest_containing(self, lo: int, hi: int) -> TreeNode:
        """Deepest node whose block interval contains [lo, hi]."""
        node = self.root
        while True:
            inner = next(
                (c for c in node.children if c.lo <= lo and hi <= c.hi), None
            )
            if inner is None:
                return node
            node = inner

    def validate(self) -> None:
        """Check the structural invariants of the construction."""
        if self.root.lo != 1 or self.root.hi != self.m:
            raise ValueError("root must cover all blocks")
        if self.root.sigma != 0.0:
            raise ValueError("root noise magnitude must be 0")
        for node in self.nodes:
            if node.is_leaf:
                if node.sigma != 1.0:
                    raise ValueError("leaf noise magnitude must be 1")
                continue
            spans = [(c.lo, c.hi) for c in node.children]
            expect = node.lo
            for lo, hi in spans:
                if lo != expect or hi < lo:
                    raise ValueError(f"children do not partition {node!r}")
                expect = hi + 1
            if expect != node.hi + 1:
                raise ValueError(f"children do not partition {node!r}")
            for c in node.children:
                if not c.sigma > node.sigma:
                    raise ValueError("sigma must strictly increase toward leaves")
            total = node.totlen
            dominant = [
                c for c in node.children if c.is_leaf and 2 * self.lengths[c.lo - 1] > total
            ]
            long_blocks = [
                i for i in range(node.lo, node.hi + 1) if 2 * self.lengths[i - 1] > total
            ]
            if long_blocks:
                if not dominant or dominant[0].lo != long_blocks[0]:
                    raise ValueError("dominant block must be split out as a leaf child")
            else:
                if len(node.children) != 2:
                    raise ValueError("nodes without a dominant block must be binary")
                left = node.children[0]
                prefix = left.totlen
                if 4 * prefix < total or 4 * prefix > 3 * total:
                    raise ValueError("binary split must land in [S/4, 3S/4]")
                if 4 * (prefix - self.lengths[left.hi - 1]) >= total:
                    raise ValueError("binary split index must be the smallest valid one")


def build_tree(b: BlockRepresentation) -> AdversaryTree:
    """Build the adversary tree for an instance with at least two blocks.

    Recursive rule for a block range with total length S: a single block is
    a leaf; if some block exceeds S/2 (necessarily unique) it becomes a leaf
    child with the remaining ranges recursing on either side; otherwise the
    range splits at the smallest prefix reaching S/4 (the prefix then stays
    below 3S/4).  Noise magnitude: sigma = sqrt(1 - ln(size)/ln(m)).
    """
    if b.m < 2:
        raise ValueError("tree adversary requires at least 2 blocks")
    lengths = b.lengths
    prefix = [0]
    for l in lengths:
        prefix.append(prefix[-1] + l)

    def make(lo: int, hi: int) -> TreeNode:
        total = prefix[hi] - prefix[lo - 1]
        if lo == hi:
            return TreeNode(lo, hi, total, ())
        star = next(
            (i for i in range(lo, hi + 1) if 2 * lengths[i - 1] > total), None
        )
        if star is not None:
            children = []
            if star > lo:
                children.append(make(lo, star - 1))
            children.append(TreeNode(star, star, lengths[star - 1], ()))
            if star < hi:
                children.append(make(star + 1, hi))
            return TreeNode(lo, hi, total, tuple(children))
        cut = next(
            i for i in range(lo, hi + 1)
            if 4 * (prefix[i] - prefix[lo - 1]) >= total
        )
        return TreeNode(lo, hi, total, (make(lo, cut), make(cut + 1, hi)))

    root = make(1, b.m)
    log_m = math.log(b.m)
    nodes: list[TreeNode] = []
    stack = [root]
    while stack:
        node = stack.pop()
        node.index = len(nodes)
        nodes.append(node)
        node.sigma = math.sqrt(1.0 - math.log(node.size) / log_m)
        node.high_value = 0.5 + 0.5 * node.sigma
        node.low_value = 1.0 - node.high_value
        for child in reversed(node.children):
            child.parent = node
            child.depth = node.depth + 1
            stack.append(child)
    leaves = sorted((nd for nd in nodes if nd.is_leaf), key=lambda nd: nd.lo)
    return AdversaryTree(root, tuple(nodes), tuple(leaves), lengths)


@dataclass(frozen=True)
class TreeSample:
    """Values for every tree node plus the block means read off the leaves."""

    node_values: np.ndarray
    block_means: np.ndarray

    def __post_init__(self):
        self.node_values.setflags(write=False)
        self.block_means.setflags(write=False)


def sample_tree_values(tree: AdversaryTree, rng: np.random.Generator) -> TreeSample:
    """Draw one realisation of the tree martingale.

    The root is 1/2.  Each child takes one of its two candidate values; the
    probability of the high value is the unique choice that makes the
    conditional expectation equal the parent's value.
    """
    values = np.empty(len(tree.nodes))
    values[tree.root.index] = 0.5
    for node in tree.nodes:
        if node is tree.root:
            continue
        parent_value = values[node.parent.index]
        p_high = (parent_value - node.low_value) / (node.high_value - node.low_value)
        take_high = rng.random() < min(max(p_high, 0.0), 1.0)
        values[node.index] = node.high_value if take_high else node.low_value
    means = np.array([values[leaf.index] for leaf in tree.leaves])
    return TreeSample(values, means)


def sample_tree_node_values(tree: AdversaryTree, count: int,
                            rng: np.random.Generator) -> np.ndarray:
    """Vectorised sampler: node values of ``count`` independent realisations.

    Same law as :func:`sample_tree_values`, drawn node by node across all
    realisations at once.  Returns an array of shape (num_nodes, count)
    indexed by node preorder index.
    """
    values = np.empty((len(tree.nodes), count))
    values[tree.root.index] = 0.5
    for node in tree.nodes:
        if node is tree.root:
            continue
        parent_values = values[node.parent.index]
        spread = node.high_value - node.low_value
        p_high = np.clip((parent_values - node.low_value) / spread, 0.0, 1.0)
        take_high = rng.random(count) < p_high
        values[node.index] = np.where(take_high, node.high_value, node.low_value)
    return values


def sample_tree_leaf_means(tree: AdversaryTree, count: int,
                           rng: np.random.Generator) -> np.ndarray:
    """``count`` independent draws of the block means, shape (count, m)."""
    values = sample_tree_node_values(tree, count, rng)
    leaf_rows = [tree.leaves[i].index for i in range(tree.m)]
    return values[leaf_rows].T


def render_sequence(b: BlockRepresentation, sample: TreeSample) -> np.ndarray:
    """Expand a tree sample into the full block-constant sequence."""
    if sample.block_means.shape != (b.m,):
        raise ValueError("sample does not match the instance's block count")
    return render_block_means(b, sample.block_means)


def tree_model_moments(tree: AdversaryTree) -> BlockMeanModel:
    """Closed-form moments of the leaf means.

    E[mu_r] = 1/2 everywhere; for r != s, E[mu_r mu_s] = 1/4 + sigma(lca)^2/4
    (conditioning on the lowest common ancestor makes the two branches
    independent with mean equal to the ancestor's value, whose square has
    expectation 1/4 + sigma^2/4); the diagonal is 1/2 since leaves deviate
    from 1/2 by exactly 1/2.  Tests gate this derivation against a Monte
    Carlo oracle before exact evaluation relies on it.
    """
    m = tree.m
    mean = np.full(m, 0.5)
    second = np.zeros((m, m))
    np.fill_diagonal(second, 0.5)
    for node in tree.nodes:
        if node.is_leaf:
            continue
        value = 0.25 + 0.25 * node.sigma ** 2
        for a in node.children:
            for c in node.children:
                if a is c:
                    continue
                second[a.lo - 1 : a.hi, c.lo - 1 : c.hi] = value
    return BlockMeanModel(mean, second)


@dataclass(frozen=True)
class EdgeVarianceCheck:
    """Per-edge comparison of the two-point conditional variance to its formula."""

    parent_interval: tuple[int, int]
    child_interval: tuple[int, int]
    formula: float
    deviation: float         # max |measured - formula| over parent realisations
    realisation_gap: float   # |var(high parent) - var(low parent)|


@dataclass(frozen=True)
class VarianceReport:
    edges: tuple[EdgeVarianceCheck, ...]
    max_deviation: float
    max_realisation_gap: float

    def within(self, tol: float) -> bool:
        return self.max_deviation <= tol


def conditional_variance_check(tree: AdversaryTree) -> VarianceReport:
    """Verify Var(mu_child | mu_parent) = (ln size(u) - ln size(v)) / (4 ln m).

    The check runs over every edge and both parent realisations; the
    variance must be the same number regardless of which value the parent
    took.
    """
    log_m = math.log(tree.m)
    checks = []
    for parent, child in tree.edges():
        formula = (math.log(parent.size) - math.log(child.size)) / (4 * log_m)
        spread = child.high_value - child.low_value
        variances = []
        for parent_value in (parent.high_value, parent.low_value):
            p = (parent_value - child.low_value) / spread
            variances.append(p * (1 - p) * spread * spread)
        deviation = max(abs(v - formula) for v in variances)
        checks.append(
            EdgeVarianceCheck(
                (parent.lo, parent.hi),
                (child.lo, child.hi),
                formula,
                deviation,
                abs(variances[0] - variances[1]),
            )
        )
    return VarianceReport(
        tuple(checks),
        max(c.deviation for c in checks),
        max(c.realisation_gap for c in checks),
    )


def _dominant_leaf_child(tree: AdversaryTree, node: TreeNode) -> TreeNode | None:
    for child in node.children:
        if child.is_leaf and 2 * tree.lengths[child.lo - 1] > node.totlen:
            return child
    return None


def find_technical_edge(tree: AdversaryTree, i: int, j: int) -> tuple[TreeNode, TreeNode]:
    """Find an edge (u, v) whose child subtree is unseen and heavy.

    Guarantees, for any 1 <= i <= j <= m: (1) v's blocks are disjoint from
    1..i-1; (2) totlen(v) >= totlen([i, j]) / 32; (3) size(v) <= size(u)/2.
    The search follows the constructive case analysis: locate the deepest
    node containing [i, j]; a dominant block inside must lie in [i, j] and
    its leaf edge wins outright, otherwise descend into whichever child
    carries at least half of totlen([i, j]) and repeat once, resolving the
    remaining binary case through the child whose blocks cannot precede i.
    """
    if not 1 <= i <= j <= tree.m:
        raise ValueError(f"need 1 <= i <= j <= {tree.m}, got ({i}, {j})")

    u1 = tree.deepest_containing(i, j)
    if u1.is_leaf:
        return u1.parent, u1
    dom = _dominant_leaf_child(tree, u1)
    if dom is not None:
        return u1, dom

    # Binary, no dominant block: children straddle [i, j].
    left, right = u1.children
    prefix_cache = _totlen_prefix(tree)
    overlap_left = _range_totlen(prefix_cache, max(i, left.lo), min(j, left.hi))
    overlap_right = _range_totlen(prefix_cache, max(i, right.lo), min(j, right.hi))
    if overlap_right >= overlap_left:
        sub, lo2, hi2 = right, right.lo, j
        prefer_left_child = True     # everything under `right` is disjoint from 1..i-1
    else:
        sub, lo2, hi2 = left, i, left.hi
        prefer_left_child = False    # only the right child of the split is safe

    v1 = _deepest_within(sub, lo2, hi2)
    if v1.is_leaf:
        return v1.parent, v1
    dom = _dominant_leaf_child(tree, v1)
    if dom is not None:
        return v1, dom

    cand = v1.children[0] if prefer_left_child else v1.children[1]
    if cand.is_leaf:
        return v1, cand
    dom = _dominant_leaf_child(tree, cand)
    if dom is not None:
        return cand, dom
    a, c = cand.children
    pick = a if a.size <= c.size else c
    return cand, pick


def _deepest_within(node: TreeNode, lo: int, hi: int) -> TreeNode:
    while True:
        inner = next(
            (ch for ch in node.children if ch.lo <= lo and hi <= ch.hi), None
        )
        if inner is None:
            return node
        node = inner


def _totlen_prefix(tree: AdversaryTree) -> list[int]:
    prefix = [0]
    for l in tree.lengths:
        prefix.append(prefix[-1] + l)
    return prefix


def _range_totlen(prefix: list[int], lo: int, hi: int) -> int:
    if lo > hi:
        return 0
    return prefix[hi] - prefix[lo - 1]


# --- lazy fair-coin stream for very long instances -------------------------


class BernoulliBlockSampler:
    """Reusable per-instance structure for lazily sampled fair-coin streams.

    Serving a block-aligned window mean only requires, for each distinct
    block length, the number of such blocks inside the window and a
    Binomial(count, 1/2) draw for how many of them came up one.  This makes
    the adversary usable on instances whose horizon is far too long to
    materialise (the separation family at large depth).
    """

    def __init__(self, b: BlockRepresentation):
        self.b = b
        bounds = [b.origin]
        for l in b.lengths:
            bounds.append(bounds[-1] + l)
        self.bounds = bounds  # absolute block boundaries, bounds[0] = origin
        by_length: dict[int, list[int]] = {}
        for idx, l in enumerate(b.lengths):
            by_length.setdefault(l, []).append(idx)
        self.classes = sorted(by_length.items())  # block indices are ascending

    def stream(self, rng: np.random.Generator) -> "BernoulliBlockStream":
        return BernoulliBlockStream(self, rng)


class BernoulliBlockStream(SequenceStream):
    """Fair-coin adversary sequence, sampled lazily per block-aligned query.

    Queries must be non-overlapping and move forward (forecasters read left
    to right and the harness scores one window beyond the final read), so
    each block's bit is drawn at most once and the joint law matches dense
    sampling exactly.  The prefix before the first stopping time reads as
    zeros.
    """

    def __init__(self, sampler: BernoulliBlockSampler, rng: np.random.Generator):
        super().__init__(sampler.bounds[-1])
        self.sampler = sampler
        self.rng = rng
        self._sampled_until = 0

    def _block_range(self, start: int, stop: int) -> tuple[int, int]:
        bounds = self.sampler.bounds
        if start < bounds[0]:
            raise StreamError("window starts inside the pre-origin prefix")
        a = bisect_left(bounds, start)
        z = bisect_left(bounds, stop)
        if bounds[a] != start or bounds[z] != stop:
            raise StreamError("lazy fair-coin stream serves block-aligned windows only")
        return a, z

    def _sample_mean(self, start: int, stop: int) -> float:
        if start < self._sampled_until:
            raise StreamError("lazy stream cannot re-sample an earlier window")
        a, z = self._block_range(start, stop)
        total = 0.0
        for length, indices in self.sampler.classes:
            count = bisect_left(indices, z) - bisect_left(indices, a)
            if count:
                total += float(length) * self.rng.binomial(count, 0.5)
        self._sampled_until = stop
        return total / (stop - start)

    def read_mean(self, count: int) -> float:
        start = self.position
        self._advance(count)
        if count == 0:
            raise ValueError("mean of an empty window is undefined")
        return self._sample_mean(start, start + count)

    def target_mean(self, t: int, w: int) -> float:
        if t < self.position:
            raise StreamError("target window precedes values already consumed")
        if w < 1 or t + w > self.n:
            raise StreamError(f"window ({t}, {w}) does not fit horizon {self.n}")
        return self._sample_mean(t, t + w)
