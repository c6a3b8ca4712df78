"""Forecasting algorithms for PLS instances.

All forecasters share the same shape: consume a prefix of the sequence
through a :class:`~pls.streams.SequenceStream`, then predict the mean of a
window starting at the current position.  Randomness comes exclusively from
an explicit ``rng`` handle (a ``numpy.random.Generator``), so runs are
deterministic per seed.

* ``uniform_forecast`` -- recursive random scale selection over the first
  2^floor(log2 m) blocks; the workhorse for near-uniform block lengths.
* ``general_forecast`` -- merges an arbitrary instance into near-uniform
  blocks first, skips the prefix before the merged range, then runs the
  uniform forecaster on the merged instance.
* ``separation_forecast`` -- the tailored recursive forecaster for the
  separation family.

``random_select_distribution`` enumerates the exact law of the random scale
selection, and ``outcome_to_coefficients`` turns an outcome into a signed
per-block weight vector, which is what makes exact (moment-based) error
evaluation possible for block-constant adversaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .instance import BlockRepresentation, greedy_merge, infer_separation_params, separation_lengths
from .streams import SequenceStream, as_stream, require_horizon

Probability = Union[Fraction, float]

_EXACT_DEPTH = 10  # exact rational probabilities up to this recursion depth
_ENUM_LIMIT = 20


@dataclass(frozen=True)
class SelectOutcome:
    """One outcome (i, j) of the random scale selection with its probability.

    Block ``i`` is where the prediction starts; the preceding ``j`` blocks
    supply the estimate and the following ``j`` blocks are the target.
    """

    i: int
    j: int
    probability: Probability

    def __post_init__(self):
        if self.j < 1:
            raise ValueError("half-window must be at least one block")
        if not 0 < self.probability <= 1:
            raise ValueError(f"probability {self.probability} outside (0, 1]")


@dataclass(frozen=True)
class OutcomeDistribution:
    """Exact law of the random scale selection for one (s, k) call."""

    outcomes: tuple[SelectOutcome, ...]
    s: int
    k: int

    def __post_init__(self):
        pairs = [(o.i, o.j) for o in self.outcomes]
        if len(set(pairs)) != len(pairs):
            raise ValueError("outcomes must be distinct")
        for o in self.outcomes:
            if not (self.s <= o.i - o.j and o.i + o.j <= self.s + 2 ** self.k):
                raise ValueError(f"outcome ({o.i}, {o.j}) violates the (s, k) contract")
        total = sum(o.probability for o in self.outcomes)
        if abs(float(total) - 1.0) > 1e-9:
            raise ValueError(f"outcome probabilities sum to {float(total)}, not 1")

    def __len__(self) -> int:
        return len(self.outcomes)

    def as_dict(self) -> dict[tuple[int, int], Probability]:
        return {(o.i, o.j): o.probability for o in self.outcomes}


@dataclass(frozen=True)
class Prediction:
    """A forecast: at timestep ``t`` predict mean ``mu_hat`` for the next ``w`` values."""

    t: int
    w: int
    mu_hat: float

    def __post_init__(self):
        if self.t < 0 or self.w < 1:
            raise ValueError(f"invalid prediction window (t={self.t}, w={self.w})")
        if not 0.0 <= self.mu_hat <= 1.0:
            raise ValueError(f"prediction {self.mu_hat} outside [0, 1]")


def format_prediction(pred: Prediction, mu: float) -> str:
    """Render the standard one-line output ``t,w,mu_hat,mu,squared_error``."""
    err = (pred.mu_hat - mu) ** 2
    return f"{pred.t},{pred.w},{pred.mu_hat!r},{mu!r},{err!r}"


def _check_select_args(b: BlockRepresentation, s: int, k: int) -> None:
    if s < 1 or k < 1:
        raise ValueError(f"need s >= 1 and k >= 1, got (s={s}, k={k})")
    if s + 2 ** k - 1 > b.m:
        raise ValueError(
            f"selection range [{s}, {s + 2 ** k - 1}] exceeds {b.m} blocks"
        )


def random_select(b: BlockRepresentation, s: int, k: int, rng: np.random.Generator) -> tuple[int, int]:
    """Randomly select a prediction start block i and half-window j in blocks.

    Within blocks s .. s+2^k-1: with probability 1/k split the range in the
    middle, predicting the second half from the first; otherwise descend
    into one of the two halves, weighted by their share of the total length.
    The result always satisfies s <= i - j and i + j <= s + 2^k.
    """
    _check_select_args(b, s, k)
    while True:
        if k == 1 or rng.random() < 1.0 / k:
            return s + 2 ** (k - 1), 2 ** (k - 1)
        half = 2 ** (k - 1)
        first = sum(b.lengths[s - 1 : s - 1 + half])
        both = first + sum(b.lengths[s - 1 + half : s - 1 + 2 * half])
        if rng.random() >= first / both:
            s += half
        k -= 1


def random_select_distribution(b: BlockRepresentation, s: int, k: int) -> OutcomeDistribution:
    """Enumerate the exact law of :func:`random_select` (2^k - 1 outcomes).

    Probabilities are exact rationals for k <= 10 and floats beyond;
    enumeration is refused above k = 20.
    """
    _check_select_args(b, s, k)
    if k > _ENUM_LIMIT:
        raise ValueError(f"enumeration limited to k <= {_ENUM_LIMIT}, got {k}")
    exact = k <= _EXACT_DEPTH
    one = Fraction(1) if exact else 1.0

    acc: dict[tuple[int, int], Probability] = {}

    def descend(s0: int, k0: int, mass: Probability) -> None:
        top = mass / k0 if k0 > 1 else mass
        key = (s0 + 2 ** (k0 - 1), 2 ** (k0 - 1))
        acc[key] = acc.get(key, 0) + top
        if k0 == 1:
            return
        half = 2 ** (k0 - 1)
        first = sum(b.lengths[s0 - 1 : s0 - 1 + half])
        both = first + sum(b.lengths[s0 - 1 + half : s0 - 1 + 2 * half])
        p = Fraction(first, both) if exact else first / both
        rest = mass - top
        descend(s0, k0 - 1, rest * p)
        descend(s0 + half, k0 - 1, rest * (one - p))

    descend(s, k, one)
    outcomes = tuple(
        SelectOutcome(i, j, prob) for (i, j), prob in sorted(acc.items())
    )
    return OutcomeDistribution(outcomes, s=s, k=k)


def uniform_forecast_distribution(b: BlockRepresentation) -> OutcomeDistribution:
    """Exact outcome law of the uniform forecaster on ``b`` (m >= 2)."""
    if b.m < 2:
        raise ValueError("uniform forecaster needs at least 2 blocks")
    return random_select_distribution(b, 1, b.m.bit_length() - 1)


def outcome_to_coefficients(b: BlockRepresentation, outcome: SelectOutcome) -> list[Fraction]:
    """Signed per-block weights c with prediction error = sum_r c_r * mu_r.

    Valid whenever the sequence is constant within each block with means
    mu_1..mu_m: source blocks i-j..i-1 get weight l_r / w0, target blocks
    i..i+j-1 get weight -l_r / w.  The weights sum to +1 over the source and
    -1 over the target.
    """
    i, j = outcome.i, outcome.j
    if i - j < 1 or i + j - 1 > b.m:
        raise ValueError(f"outcome ({i}, {j}) does not fit {b.m} blocks")
    w0 = sum(b.lengths[i - j - 1 : i - 1])
    w = sum(b.lengths[i - 1 : i + j - 1])
    coeffs = [Fraction(0)] * b.m
    for r in range(i - j, i):
        coeffs[r - 1] = Fraction(b.lengths[r - 1], w0)
    for r in range(i, i + j):
        coeffs[r - 1] = -Fraction(b.lengths[r - 1], w)
    return coeffs


Forecaster = Callable[[SequenceStream, np.random.Generator], Prediction]


def make_uniform_forecaster(b: BlockRepresentation) -> Forecaster:
    """Forecaster for near-uniform blocks (requires m >= 2).

    Draws (i, j), observes everything up to the start of block i, and
    predicts that the next j blocks average the same as the previous j.
    Only the first 2^floor(log2 m) blocks are ever used.
    """
    if b.m < 2:
        raise ValueError("uniform forecaster needs at least 2 blocks")
    k = b.m.bit_length() - 1
    starts_rel = [0]
    for l in b.lengths:
        starts_rel.append(starts_rel[-1] + l)

    horizon = b.n

    def run(stream, rng: np.random.Generator) -> Prediction:
        stream = require_horizon(as_stream(stream), horizon)
        i, j = random_select(b, 1, k, rng)
        t_rel = starts_rel[i - 1]
        w0 = t_rel - starts_rel[i - j - 1]
        w = starts_rel[i + j - 1] - t_rel
        stream.skip(b.origin + t_rel - w0)
        mu_hat = stream.read_mean(w0)
        return Prediction(b.origin + t_rel, w, mu_hat)

    return run


def uniform_forecast(b: BlockRepresentation, stream, rng: np.random.Generator) -> Prediction:
    return make_uniform_forecaster(b)(stream, rng)


def make_general_forecaster(b: BlockRepresentation) -> Forecaster:
    """Forecaster for arbitrary instances via merging.

    Merges the m' witness range into near-uniform blocks (ratio at most 2),
    skips the sequence prefix before the merged range, and runs the uniform
    forecaster on the merged instance.  If the merge yields fewer than two
    blocks the instance carries no usable split; the fallback predicts 0.5
    over the whole remaining window at the earliest stopping time, which
    caps the squared error at 1/4.
    """
    plan = greedy_merge(b, 2)
    merged = plan.as_block_representation()
    prefix = b.origin + sum(b.lengths[: plan.cut_indices[0] - 1])

    horizon = b.n
    if merged.m < 2:
        t, w = b.origin, horizon - b.origin

        def fallback(stream, rng) -> Prediction:
            require_horizon(as_stream(stream), horizon)
            return Prediction(t, w, 0.5)

        return fallback

    inner = make_uniform_forecaster(merged)

    def run(stream, rng: np.random.Generator) -> Prediction:
        stream = require_horizon(as_stream(stream), horizon)
        stream.skip(prefix)
        sub = inner(stream, rng)
        return Prediction(prefix + sub.t, sub.w, sub.mu_hat)

    return run


def general_forecast(b: BlockRepresentation, stream, rng: np.random.Generator) -> Prediction:
    return make_general_forecaster(b)(stream, rng)


def make_separation_forecaster(b: BlockRepresentation, k: int | None = None,
                               h: int | None = None) -> Forecaster:
    """Forecaster specialised to the separation family.

    The instance structure is known in advance: at recursion depth d (from h
    down to 1) the layout is left half, long middle block, right half.  With
    probability 1/d predict the right half's average from the left half's
    (reading the middle block in between but ignoring it); otherwise recurse
    into one of the halves with equal probability.  At depth 1 the layout is
    2k equal blocks and the last k are predicted from the first k.
    """
    if k is None or h is None:
        params = infer_separation_params(b)
        if params is None:
            raise ValueError("instance is not from the separation family")
        k, h = params
    elif b.lengths != separation_lengths(k, h):
        raise ValueError(f"instance does not match separation(k={k}, h={h})")

    horizon = b.origin + (2 * k) ** h

    def run(stream, rng: np.random.Generator) -> Prediction:
        stream = require_horizon(as_stream(stream), horizon)
        stream.skip(b.origin)
        offset = b.origin          # absolute start of the current sub-instance
        span = (2 * k) ** h        # its total length
        for depth in range(h, 0, -1):
            if depth == 1:
                half = span // 2
                mu_hat = stream.read_mean(half)
                return Prediction(offset + half, half, mu_hat)
            left = span * (k - 1) // (2 * k)
            middle = span // k
            if rng.random() < 1.0 / depth:
                mu_hat = stream.read_mean(left)
                stream.skip(middle)
                return Prediction(offset + left + middle, left, mu_hat)
            span = left
            if rng.random() < 0.5:
                continue           # left half: nothing to skip
            stream.skip(left + middle)
            offset += left + middle
        raise AssertionError("unreachable: depth-1 case always returns")

    return run


def separation_forecast(b: BlockRepresentation, stream, rng: np.random.Generator,
                        k: int | None = None, h: int | None = None) -> Prediction:
    return make_separation_forecaster(b, k, h)(stream, rng)
