"""Randomly generated stopping time sets and k-monotone machinery.

A probability sequence p* in [0,1]^n induces a random stopping time set by
including each timestep t independently with probability p*_t.  When p* is
k-monotone (a partition into at most k contiguous monotone runs exists),
the instance's size and approximate uniformity concentrate, which is what
the average-case experiments measure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .instance import StoppingTimeSet

_HARMONIC_EXACT_LIMIT = 10 ** 4
_harmonic_cache: list[Fraction] = [Fraction(0)]


def harmonic(n: int) -> Fraction | float:
    """The n-th harmonic number, exact up to n = 10^4 and float beyond."""
    if n < 1:
        raise ValueError(f"harmonic number needs n >= 1, got {n}")
    if n > _HARMONIC_EXACT_LIMIT:
        # pairwise summation keeps the relative error well below 1e-12
        return float(np.sum(1.0 / np.arange(1, n + 1, dtype=float)))
    while len(_harmonic_cache) <= n:
        k = len(_harmonic_cache)
        _harmonic_cache.append(_harmonic_cache[-1] + Fraction(1, k))
    return _harmonic_cache[n]


def monotone_runs(values) -> tuple[tuple[int, int], ...]:
    """Greedy partition into maximal monotone runs (half-open index ranges).

    Each run is extended as long as it stays non-decreasing or non-increasing;
    constant stretches never break a run.  Greedily taking the longest
    monotone prefix yields a minimal partition.
    """
    values = list(values)
    if not values:
        return ()
    runs = []
    start = 0
    up_ok = down_ok = True
    for idx in range(1, len(values)):
        a, b = values[idx - 1], values[idx]
        next_up = up_ok and not b < a
        next_down = down_ok and not b > a
        if next_up or next_down:
            up_ok, down_ok = next_up, next_down
        else:
            runs.append((start, idx))
            start = idx
            up_ok = down_ok = True
    runs.append((start, len(values)))
    return tuple(runs)


@dataclass(frozen=True)
class ProbabilitySequence:
    """Inclusion probabilities p* with their monotone-run decomposition."""

    values: tuple[float, ...]
    runs: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError("probability sequence must be non-empty")
        if any(v < 0.0 or v > 1.0 for v in self.values):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "runs", monotone_runs(self.values))

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def k(self) -> int:
        """Number of monotone runs (the k-monotonicity witness)."""
        return len(self.runs)

    @property
    def total(self) -> float:
        """Expected stopping set size, sum of p*."""
        return float(np.sum(self.values))

    def is_constant(self) -> bool:
        return min(self.values) == max(self.values)


def sample_stopping_set(p: ProbabilitySequence,
                        rng: np.random.Generator) -> StoppingTimeSet | None:
    """Include each timestep t independently with probability p*_t.

    An empty draw is a legitimate outcome of the model but not a playable
    instance; it is reported as None rather than raised, and experiments
    count such draws separately.
    """
    mask = rng.random(p.n) < np.asarray(p.values)
    times = np.flatnonzero(mask)
    if times.size == 0:
        return None
    return StoppingTimeSet(p.n, tuple(int(t) for t in times))


def heavy_subsequence(p: ProbabilitySequence) -> tuple[int, int]:
    """A contiguous range certifying (length * min) >= total / (k * H_n).

    Take the monotone run with the largest sum (at least total / k); within
    a non-decreasing run, among suffixes starting at i the product
    (run_end - i + 1) * p_i is maximised and reaches at least run_sum / H_n;
    symmetrically for non-increasing runs (prefixes ending at j).  Returns
    0-based inclusive (i, j); the earliest maximiser wins ties.
    """
    if p.total == 0:
        raise ValueError("heavy subsequence undefined for an all-zero sequence")
    # exact arithmetic throughout: the certificate is checked with no
    # tolerance, so selection must not lose to float rounding
    values = [Fraction(v) for v in p.values]
    best_run = max(p.runs, key=lambda r: sum(values[r[0] : r[1]]))
    lo, hi = best_run[0], best_run[1] - 1
    non_decreasing = all(
        values[t] <= values[t + 1] for t in range(lo, hi)
    )
    if non_decreasing:
        i = max(range(lo, hi + 1), key=lambda t: ((hi - t + 1) * values[t], -t))
        return i, hi
    j = max(range(lo, hi + 1), key=lambda t: ((t - lo + 1) * values[t], -t))
    return lo, j


def certificate_holds(p: ProbabilitySequence, i: int, j: int) -> bool:
    """Exact rational check of the heavy-subsequence inequality.

    (j - i + 1) * min(p_i..p_j) >= total / (k * H_n), with float inputs
    promoted to exact binary fractions so the comparison has no tolerance.
    """
    window = [Fraction(v) for v in p.values[i : j + 1]]
    total = sum(Fraction(v) for v in p.values)
    hn = harmonic(p.n)
    if not isinstance(hn, Fraction):
        hn = Fraction(hn)
    lhs = (j - i + 1) * min(window)
    return lhs * p.k * hn >= total


def load_probability_sequence(path) -> ProbabilitySequence:
    """Read a ``{"p": [reals]}`` JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or "p" not in data:
        raise ValueError("probability file must be a JSON object with a 'p' array")
    return ProbabilitySequence(tuple(data["p"]))


def save_probability_sequence(p: ProbabilitySequence, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"p": list(p.values)}, fh)
        fh.write("\n")


def random_kmonotone(n: int, k: int, rng: np.random.Generator) -> ProbabilitySequence:
    """A random sequence made of k contiguous monotone runs.

    Cut points are uniform, runs alternate direction starting from a coin
    flip, and each run is an independently sorted uniform sample.  The
    greedy decomposition of the result may use fewer than k runs.
    """
    if n < 1 or k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= n, got (n={n}, k={k})")
    cuts = np.concatenate(
        ([0], np.sort(rng.choice(np.arange(1, n), size=k - 1, replace=False)), [n])
    ) if k > 1 else np.array([0, n])
    ascending = bool(rng.integers(2))
    parts = []
    for a, b in zip(cuts, cuts[1:]):
        part = np.sort(rng.random(int(b - a)))
        parts.append(part if ascending else part[::-1])
        ascending = not ascending
    return ProbabilitySequence(tuple(np.concatenate(parts)))
