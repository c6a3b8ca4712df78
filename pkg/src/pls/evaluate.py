"""Error evaluation and bound verification.

Squared prediction error is computed two ways:

* exactly, for forecasters whose prediction is a linear functional of the
  block means (the random-scale forecasters): the error against a
  moment-specified adversary is sum over outcomes of p * c' M c, where c is
  the outcome's signed block-weight vector;
* by Monte Carlo, for everything else, with per-trial seeds derived
  deterministically from (master seed, trial index) so results are
  bit-identical regardless of parallelism (``PLS_THREADS``).

The bound-report helpers sweep every prediction window (t, w) of an
instance in exact integer arithmetic and compare against the thresholds
that the block-overlap and window-variance analyses promise.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .adversary import AdversaryTree, BlockMeanModel
from .forecaster import OutcomeDistribution, Prediction, SelectOutcome
from .instance import BlockRepresentation, approximate_uniformity, to_blocks
from .randgen import ProbabilitySequence, sample_stopping_set
from .streams import as_stream

Real = Union[float, Fraction]


# --- small closed forms ----------------------------------------------------


def phi(x: Real) -> Real:
    """The quadratic x(1-x); the potential all error bounds are stated in."""
    return x * (1 - x)


def analytic_upper_bound(C: Real, k: int, mu: Real) -> Real:
    """Worst-case error bound ((C+1)^2/C)/k * phi(mu) for the uniform forecaster.

    C bounds the max/min block-length ratio and k is the selection depth
    (floor(log2 m) for 2^k blocks).
    """
    if C < 1:
        raise ValueError(f"length ratio must be >= 1, got C={C}")
    if k < 1:
        raise ValueError(f"selection depth must be >= 1, got k={k}")
    if not 0 <= mu <= 1:
        raise ValueError(f"mean must lie in [0, 1], got {mu}")
    alpha = (C + 1) ** 2 / C
    return alpha / k * phi(mu)


def separation_bound(k: int, h: int, mu: Real) -> Real:
    """Error bound (4/h) * phi(mu) + 4/k for the separation forecaster."""
    if k < 2 or h < 1:
        raise ValueError(f"need k >= 2 and h >= 1, got (k={k}, h={h})")
    if not 0 <= mu <= 1:
        raise ValueError(f"mean must lie in [0, 1], got {mu}")
    offset = Fraction(4, k) if isinstance(mu, Fraction) else 4 / k
    return 4 * phi(mu) / h + offset


# --- window overlap profiles ------------------------------------------------


@dataclass(frozen=True)
class OverlapProfile:
    """Exact per-block overlap fractions of one prediction window.

    ``alphas[i]`` is the fraction of the window covered by block i+1; the
    fractions sum to one, are zero for fully observed blocks, and single
    out the first unseen block ``i0`` and the final (possibly partial)
    block ``j0`` with remainder ``delta``.
    """

    t: int
    w: int
    alphas: tuple[Fraction, ...]
    counts: tuple[int, ...]
    i0: int
    j0: int
    delta: int

    def __post_init__(self):
        if sum(self.alphas) != 1:
            raise ValueError("overlap fractions must sum to exactly 1")


def window_overlap_profile(b: BlockRepresentation, t: int, w: int) -> OverlapProfile:
    """Overlap profile for a window starting at stopping time t (absolute)."""
    starts = b.block_starts()
    try:
        i0 = starts.index(t) + 1
    except ValueError:
        raise ValueError(f"t={t} is not a stopping time of this instance") from None
    if not 1 <= w <= b.n - t:
        raise ValueError(f"window length must lie in [1, {b.n - t}], got {w}")
    counts = [0] * b.m
    end = t + w
    pos = t
    j0 = i0
    for i in range(i0, b.m + 1):
        block_end = starts[i - 1] + b.lengths[i - 1]
        take = min(end, block_end) - pos
        if take <= 0:
            break
        counts[i - 1] = take
        j0 = i
        pos += take
        if pos >= end:
            break
    alphas = tuple(Fraction(c, w) for c in counts)
    return OverlapProfile(t, w, alphas, tuple(counts), i0, j0, counts[j0 - 1])


# --- bound reports ----------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    """Outcome of checking one analytic bound on one instance."""

    bound_name: str
    instance: str
    measured: Real
    bound: Real
    satisfied: bool
    direction: str = ">="
    witness: tuple | None = None

    def __post_init__(self):
        ok = self.measured >= self.bound if self.direction == ">=" else self.measured <= self.bound
        if ok != self.satisfied:
            raise ValueError("satisfied flag contradicts measured/bound")


def check_block_overlap(b: BlockRepresentation) -> BoundReport:
    """Largest single-block overlap is at least 1/(2 m') for every window.

    Sweeps every stopping time and window length with an incremental exact
    scan and reports the minimum over windows of max_i alpha_i.
    """
    uni = approximate_uniformity(b)
    starts = b.block_starts()
    best_num, best_den = 1, 0  # +infinity: any ratio beats it
    witness = None
    for idx0 in range(b.m):
        t = starts[idx0]
        w = 0
        max_full = 0
        for i in range(idx0, b.m):
            length = b.lengths[i]
            for cur in range(1, length + 1):
                w += 1
                c_max = max(max_full, cur)
                if c_max * best_den < best_num * w:
                    best_num, best_den = c_max, w
                    witness = (t, w)
            max_full = max(max_full, length)
    measured = Fraction(best_num, best_den)
    bound = 1 / (2 * uni.value)
    return BoundReport(
        "block-overlap", b.label(), measured, bound,
        measured >= bound, ">=", witness,
    )


def variance_lower_bound_report(b: BlockRepresentation) -> BoundReport:
    """min over windows of (1/4) sum alpha_i^2 is at least 1/(16 m'^2).

    This is the conditional variance of the window mean under the fair-coin
    block adversary; the scan is exact integer arithmetic throughout.
    """
    uni = approximate_uniformity(b)
    starts = b.block_starts()
    best_num, best_den = 1, 0
    witness = None
    for idx0 in range(b.m):
        t = starts[idx0]
        w = 0
        sumsq_full = 0
        for i in range(idx0, b.m):
            length = b.lengths[i]
            cursq = 0
            for cur in range(1, length + 1):
                w += 1
                cursq += 2 * cur - 1
                num = sumsq_full + cursq
                den = 4 * w * w
                if num * best_den < best_num * den:
                    best_num, best_den = num, den
                    witness = (t, w)
            sumsq_full += length * length
    measured = Fraction(best_num, best_den)
    bound = 1 / (16 * uni.value ** 2)
    return BoundReport(
        "window-variance", b.label(), measured, bound,
        measured >= bound, ">=", witness,
    )


# --- exact expected error ---------------------------------------------------


@dataclass(frozen=True)
class ErrorEstimate:
    """Expected squared error, either exact or a Monte Carlo estimate."""

    mean: Real
    std_error: float
    trials: int
    mode: str  # "exact" | "monte_carlo"

    def __post_init__(self):
        if self.mode not in ("exact", "monte_carlo"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "exact" and self.std_error != 0:
            raise ValueError("exact estimates must have zero standard error")


def _outcome_support_ints(b: BlockRepresentation, o: SelectOutcome):
    """Support indices (0-based) and integer numerators of the weight vector.

    The exact weights are nums[r] / den with den = w0 * w.
    """
    i, j = o.i, o.j
    w0 = sum(b.lengths[i - j - 1 : i - 1])
    w = sum(b.lengths[i - 1 : i + j - 1])
    support = list(range(i - j - 1, i + j - 1))
    nums = [b.lengths[r] * w for r in range(i - j - 1, i - 1)]
    nums += [-b.lengths[r] * w0 for r in range(i - 1, i + j - 1)]
    return support, nums, w0 * w


def exact_expected_error(b: BlockRepresentation, dist: OutcomeDistribution,
                         model: BlockMeanModel) -> ErrorEstimate:
    """Expected squared error of an outcome-distribution forecaster.

    For each outcome, the error against a block-constant adversary is
    (c' mu)^2 with c the outcome's weight vector, so the expectation is
    sum_o p_o * c_o' M c_o.  Exact rational arithmetic when both the model
    and the distribution are exact; float otherwise.
    """
    if model.m != b.m:
        raise ValueError(f"model has {model.m} blocks, instance has {b.m}")
    exact = model.is_exact and all(
        isinstance(o.probability, Fraction) for o in dist.outcomes
    )
    if exact:
        rows, mden = model._integer_form
        total = Fraction(0)
        for o in dist.outcomes:
            support, nums, den = _outcome_support_ints(b, o)
            q = 0
            for r, ar in zip(support, nums):
                row = rows[r]
                acc = 0
                for s, cs in zip(support, nums):
                    acc += row[s] * cs
                q += ar * acc
            total += o.probability * Fraction(q, den * den * mden)
        return ErrorEstimate(total, 0.0, 0, "exact")

    _, second = model.as_float()
    total_f = 0.0
    for o in dist.outcomes:
        support, nums, den = _outcome_support_ints(b, o)
        c = np.asarray(nums, dtype=float) / den
        sub = second[np.ix_(support, support)]
        total_f += float(o.probability) * float(c @ sub @ c)
    return ErrorEstimate(total_f, 0.0, 0, "exact")


def expected_phi_of_mean(b: BlockRepresentation, model: BlockMeanModel) -> Real:
    """E[phi(mu)] where mu is the length-weighted mean of the block means."""
    if model.m != b.m:
        raise ValueError(f"model has {model.m} blocks, instance has {b.m}")
    n = b.n - b.origin
    if model.is_exact:
        rows, mden = model._integer_form
        e_mu = sum(l * mu for l, mu in zip(b.lengths, model.mean.tolist()))
        e_mu = Fraction(e_mu, n)
        q = 0
        for r, lr in enumerate(b.lengths):
            row = rows[r]
            acc = 0
            for s, ls in enumerate(b.lengths):
                acc += row[s] * ls
            q += lr * acc
        e_mu_sq = Fraction(q, n * n * mden)
        return e_mu - e_mu_sq
    mean, second = model.as_float()
    weights = np.asarray(b.lengths, dtype=float) / n
    return float(weights @ mean - weights @ second @ weights)


def bernoulli_phi_expectation(b: BlockRepresentation) -> Fraction:
    """E[phi(mu)] under the fair-coin block adversary, via its structure.

    With independent fair bits, E[mu^2] = (1 + sum w_i^2)/4 for the length
    weights w, so E[phi(mu)] = (1 - sum w_i^2)/4.  Usable on instances far
    too large for an explicit moment matrix.
    """
    n = b.n - b.origin
    sum_sq = sum(l * l for l in b.lengths)
    return (1 - Fraction(sum_sq, n * n)) / 4


# --- window variance under a moment model -----------------------------------


def window_variance_from_model(b: BlockRepresentation, model: BlockMeanModel,
                               t: int, w: int) -> float:
    """Var of the window mean from the model's covariance (float route)."""
    profile = window_overlap_profile(b, t, w)
    alpha = np.asarray(profile.counts, dtype=float) / w
    cov = model.covariance()
    return float(alpha @ cov @ alpha)


def min_window_variance_bruteforce(b: BlockRepresentation,
                                   model: BlockMeanModel) -> tuple[float, tuple[int, int]]:
    """Minimum window-mean variance over all (t, w), via the full covariance."""
    best = math.inf
    witness = (0, 0)
    for t in b.block_starts():
        for w in range(1, b.n - t + 1):
            var = window_variance_from_model(b, model, t, w)
            if var < best:
                best = var
                witness = (t, w)
    return best, witness


def tree_min_window_variance(b: BlockRepresentation,
                             tree: AdversaryTree) -> tuple[float, tuple[int, int]]:
    """Minimum window-mean variance under the tree adversary, all (t, w).

    Uses the martingale decomposition: the window mean's variance is the
    sum over edges (u, v) of Var(mu_v | mu_u) * (overlap of v's span with
    the window / w)^2, because edge increments are uncorrelated.  Each
    stopping time is processed with one vectorised pass over all window
    lengths.
    """
    prefix = [0]
    for l in b.lengths:
        prefix.append(prefix[-1] + l)
    n = prefix[-1]
    lo_ts, hi_ts, coeff = [], [], []
    for node in tree.nodes:
        if node.parent is None:
            continue
        lo_ts.append(prefix[node.lo - 1])
        hi_ts.append(prefix[node.hi])
        coeff.append((node.sigma ** 2 - node.parent.sigma ** 2) / 4.0)
    lo_ts = np.asarray(lo_ts, dtype=float)
    hi_ts = np.asarray(hi_ts, dtype=float)
    coeff = np.asarray(coeff)

    best = math.inf
    witness = (0, 0)
    for idx0 in range(b.m):
        t = prefix[idx0]
        active = hi_ts > t
        lo = np.maximum(lo_ts[active], t)
        span = hi_ts[active] - lo
        cf = coeff[active]
        wvals = np.arange(1, n - t + 1, dtype=float)
        overlap = np.clip(wvals[None, :] + (t - lo)[:, None], 0.0, span[:, None])
        var = (cf @ (overlap * overlap)) / (wvals * wvals)
        k = int(np.argmin(var))
        if var[k] < best:
            best = float(var[k])
            witness = (b.origin + t, k + 1)
    return best, witness


# --- Monte Carlo ------------------------------------------------------------


def trial_rng(master_seed: int, trial: int, role: int = 0) -> np.random.Generator:
    """Deterministic per-trial generator mixed from (master seed, trial, role).

    Role 0 drives the sequence sampler and role 1 the forecaster, so the two
    random sources stay independent and reproducible under any execution
    order.
    """
    if master_seed < 0 or trial < 0 or role < 0:
        raise ValueError("seed components must be non-negative")
    return np.random.default_rng(np.random.SeedSequence((master_seed, trial, role)))


def _thread_count() -> int:
    raw = os.environ.get("PLS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"PLS_THREADS must be an integer, got {raw!r}") from None


def monte_carlo_error(forecaster: Callable, sequence_sampler: Callable,
                      trials: int, master_seed: int) -> ErrorEstimate:
    """Mean squared error over independent trials.

    Each trial samples a sequence, runs the forecaster on a fresh stream,
    and scores the prediction against the realised window mean.  Trials are
    chunked across ``PLS_THREADS`` workers, but each error lands in its
    trial's slot and the reduction runs in trial order, so the estimate is
    bit-identical for any thread count.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    errors = np.empty(trials)

    def run_trial(i: int) -> None:
        try:
            source = sequence_sampler(trial_rng(master_seed, i, 0))
            stream = as_stream(source)
            pred: Prediction = forecaster(stream, trial_rng(master_seed, i, 1))
            mu = stream.target_mean(pred.t, pred.w)
        except Exception as exc:
            raise RuntimeError(f"trial {i} failed: {exc}") from exc
        errors[i] = (pred.mu_hat - mu) ** 2

    workers = _thread_count()
    if workers == 1:
        for i in range(trials):
            run_trial(i)
    else:
        chunk = (trials + workers - 1) // workers
        ranges = [range(a, min(a + chunk, trials)) for a in range(0, trials, chunk)]

        def run_chunk(rng_: range) -> None:
            for i in rng_:
                run_trial(i)

        with ThreadPoolExecutor(max_workers=workers) as pool:
            for future in [pool.submit(run_chunk, r) for r in ranges]:
                future.result()

    mean = math.fsum(errors) / trials
    if trials > 1:
        var = math.fsum((e - mean) ** 2 for e in errors) / (trials - 1)
        std_error = math.sqrt(var / trials)
    else:
        std_error = 0.0
    return ErrorEstimate(mean, std_error, trials, "monte_carlo")


# --- average-case experiment -------------------------------------------------


@dataclass(frozen=True)
class AverageCaseReport:
    """Per-trial statistics of random stopping sets drawn from p*.

    ``sizes`` includes empty draws as zeros; ``mprimes`` and the ratio
    columns cover non-empty draws only.  Joint-event accounting (size below
    twice its mean, uniformity above the explicit threshold) is filled in
    only for constant p*, matching the regime where those thresholds are
    stated.
    """

    n: int
    trials: int
    master_seed: int
    empty_draws: int
    const_p: float | None
    sizes: tuple[int, ...]
    mprimes: tuple[Fraction, ...]
    size_ratios: tuple[float, ...]
    tightness_ratios: tuple[float, ...]
    required_frequency: float
    size_threshold: float | None = None
    mprime_threshold: Fraction | None = None
    joint_count: int | None = None
    joint_frequency: float | None = None


def average_case_experiment(p: ProbabilitySequence, trials: int,
                            master_seed: int) -> AverageCaseReport:
    """Sample p*-random stopping sets and measure size and uniformity.

    For constant p* the joint event {|T| <= 2np, m' >= n/ceil(2 ln n / p) - 1}
    is counted per trial.  For every non-empty draw the report also records
    |T| / m0 and m' * k * (ln n)^2 / m0 with m0 = sum p*; these ratios are
    reported, not asserted, since the general statement fixes no constants.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if p.total == 0:
        raise ValueError("all-zero p* never produces a playable instance")
    n = p.n
    m0 = p.total
    const_p = p.values[0] if p.is_constant() else None
    log_n = math.log(n) if n > 1 else 1.0

    size_threshold = mprime_threshold = None
    if const_p is not None:
        size_threshold = 2 * n * const_p
        level = math.ceil(2 * math.log(n) / const_p) if const_p > 0 else None
        mprime_threshold = Fraction(n, level) - 1 if level else None

    sizes, mprimes, size_ratios, tightness = [], [], [], []
    empty = 0
    joint = 0
    for trial in range(trials):
        ts = sample_stopping_set(p, trial_rng(master_seed, trial, 0))
        if ts is None:
            empty += 1
            sizes.append(0)
            continue
        size = ts.size
        uni = approximate_uniformity(to_blocks(ts))
        sizes.append(size)
        mprimes.append(uni.value)
        size_ratios.append(size / m0)
        tightness.append(float(uni.value) * p.k * log_n * log_n / m0)
        if const_p is not None and size <= size_threshold and uni.value >= mprime_threshold:
            joint += 1

    required = 1 - math.exp(-m0 / 3) - 1 / n
    return AverageCaseReport(
        n=n,
        trials=trials,
        master_seed=master_seed,
        empty_draws=empty,
        const_p=const_p,
        sizes=tuple(sizes),
        mprimes=tuple(mprimes),
        size_ratios=tuple(size_ratios),
        tightness_ratios=tuple(tightness),
        required_frequency=required,
        size_threshold=size_threshold,
        mprime_threshold=mprime_threshold,
        joint_count=joint if const_p is not None else None,
        joint_frequency=joint / trials if const_p is not None else None,
    )
