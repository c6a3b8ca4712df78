"""Instance encodings for prediction with limited selectivity (PLS).

A PLS instance is a horizon length ``n`` together with a stopping time set
``T``, the timesteps at which a forecaster is allowed to start a prediction.
The equivalent block representation records the gaps between consecutive
stopping times.  Both encodings are immutable value types; every operation
here is a pure function.

The central quantity is the *approximate uniformity* ``m'`` of an instance:
the maximum, over contiguous block intervals, of (interval sum) / (interval
max).  It is computed exactly as a rational number.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Union


@dataclass(frozen=True)
class StoppingTimeSet:
    """A horizon length and the sorted timesteps where predicting is allowed.

    ``times`` are distinct integers in ``[0, n - 1]``, ascending.  An empty
    set is rejected: with no stopping times the game cannot be played.
    """

    n: int
    times: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(int(t) for t in self.times))
        if self.n < 1:
            raise ValueError(f"horizon must be positive, got n={self.n}")
        if not self.times:
            raise ValueError("stopping time set must be non-empty")
        if any(t < 0 or t >= self.n for t in self.times):
            raise ValueError(f"stopping times must lie in [0, {self.n - 1}]")
        if any(a >= b for a, b in zip(self.times, self.times[1:])):
            raise ValueError("stopping times must be strictly increasing")

    @property
    def size(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class BlockRepresentation:
    """Block lengths between consecutive stopping times.

    ``lengths[i]`` is the gap from the i-th stopping time to the next one
    (the last block runs to the end of the horizon).  ``origin`` is the first
    stopping time: instances whose stopping set does not contain 0 are
    normalised by recording the shift here, so all block arithmetic can
    assume the first block starts at the first stopping time.
    """

    lengths: tuple[int, ...]
    origin: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(int(x) for x in self.lengths))
        if not self.lengths:
            raise ValueError("block representation must have at least one block")
        if any(l < 1 for l in self.lengths):
            raise ValueError("block lengths must be positive integers")
        if self.origin < 0:
            raise ValueError(f"origin must be non-negative, got {self.origin}")

    @property
    def m(self) -> int:
        """Number of blocks."""
        return len(self.lengths)

    @property
    def n(self) -> int:
        """Horizon length of the underlying instance."""
        return self.origin + sum(self.lengths)

    def block_starts(self) -> list[int]:
        """Absolute timestep at which each block starts (equals the stopping times)."""
        starts = [self.origin]
        for l in self.lengths[:-1]:
            starts.append(starts[-1] + l)
        return starts

    def label(self) -> str:
        """Compact identifier used in reports and CSV rows."""
        if self.m <= 8:
            body = ",".join(str(l) for l in self.lengths)
        else:
            body = f"{self.lengths[0]},{self.lengths[1]},..x{self.m}"
        suffix = f"+{self.origin}" if self.origin else ""
        return f"[{body}]{suffix}"


@dataclass(frozen=True)
class MergePlan:
    """A merge of consecutive blocks of a source instance.

    ``cut_indices`` are 1-based block indices ``i_1 < ... < i_{m'+1}`` into
    ``[1, m + 1]``; merged block j covers source blocks ``i_j .. i_{j+1}-1``.
    """

    cut_indices: tuple[int, ...]
    merged_lengths: tuple[int, ...]

    def __post_init__(self):
        if len(self.cut_indices) != len(self.merged_lengths) + 1:
            raise ValueError("need one more cut index than merged blocks")
        if not self.merged_lengths:
            raise ValueError("a merge must contain at least one block")
        if any(a >= b for a, b in zip(self.cut_indices, self.cut_indices[1:])):
            raise ValueError("cut indices must be strictly increasing")
        if self.cut_indices[0] < 1:
            raise ValueError("cut indices are 1-based")

    @property
    def m(self) -> int:
        return len(self.merged_lengths)

    def validate_against(self, b: BlockRepresentation) -> None:
        """Check that the plan is a genuine merge of ``b`` (raises on mismatch)."""
        if self.cut_indices[-1] > b.m + 1:
            raise ValueError("cut indices exceed the source instance")
        for j, lj in enumerate(self.merged_lengths):
            lo, hi = self.cut_indices[j], self.cut_indices[j + 1]
            if sum(b.lengths[lo - 1 : hi - 1]) != lj:
                raise ValueError(
                    f"merged block {j + 1} is {lj} but source blocks "
                    f"{lo}..{hi - 1} sum to {sum(b.lengths[lo - 1:hi - 1])}"
                )

    def as_block_representation(self) -> BlockRepresentation:
        return BlockRepresentation(self.merged_lengths, origin=0)


def to_blocks(ts: StoppingTimeSet) -> BlockRepresentation:
    """Convert a stopping time set to its block representation.

    Block i is the gap between the i-th and (i+1)-th stopping times; the
    last block extends to the horizon.  The first stopping time becomes the
    ``origin`` shift.
    """
    t = ts.times
    lengths = [b - a for a, b in zip(t, t[1:])] + [ts.n - t[-1]]
    return BlockRepresentation(tuple(lengths), origin=t[0])


def from_blocks(b: BlockRepresentation) -> StoppingTimeSet:
    """Inverse of :func:`to_blocks`."""
    return StoppingTimeSet(n=b.n, times=tuple(b.block_starts()))


@dataclass(frozen=True)
class UniformityResult:
    """Exact approximate uniformity together with its witness interval.

    ``value`` is the maximal (interval sum)/(interval max) over contiguous
    block intervals, and ``(i, j)`` is the 1-based witness attaining it
    (lexicographically smallest on ties).
    """

    value: Fraction
    i: int
    j: int

    def __float__(self) -> float:
        return float(self.value)


def _better(num: int, den: int, i: int, j: int,
            best: tuple[int, int, int, int]) -> bool:
    """True if num/den at witness (i, j) beats the current best.

    Larger value wins; exact ties prefer the lexicographically smaller
    witness.  Comparison by cross multiplication keeps everything integral.
    """
    bn, bd, bi, bj = best
    lhs, rhs = num * bd, bn * den
    if lhs != rhs:
        return lhs > rhs
    return (i, j) < (bi, bj)


def approximate_uniformity(b: BlockRepresentation) -> UniformityResult:
    """Exact approximate uniformity m'(L) with its witness interval.

    Divide and conquer on the position of the range maximum: the best
    interval that contains the current range's maximum is the full range
    (any proper sub-interval through the maximum has the same denominator
    but a smaller sum), so it suffices to score the full range and recurse
    strictly left and right of the maximum position.  Every optimal interval
    is scored this way, so the lexicographic tie-break is global.
    """
    lengths = b.lengths
    prefix = [0]
    for l in lengths:
        prefix.append(prefix[-1] + l)

    best = (0, 1, 0, 0)  # num, den, i, j -- 0/1 loses to everything
    # Explicit stack of (lo, hi) 1-based inclusive ranges.
    stack = [(1, b.m)]
    while stack:
        lo, hi = stack.pop()
        if lo > hi:
            continue
        seg = lengths[lo - 1 : hi]
        pos = lo + max(range(len(seg)), key=seg.__getitem__)
        num = prefix[hi] - prefix[lo - 1]
        den = lengths[pos - 1]
        if _better(num, den, lo, hi, best):
            best = (num, den, lo, hi)
        stack.append((lo, pos - 1))
        stack.append((pos + 1, hi))
    num, den, i, j = best
    return UniformityResult(Fraction(num, den), i, j)


_BRUTEFORCE_LIMIT = 2 ** 14


def approximate_uniformity_bruteforce(b: BlockRepresentation) -> UniformityResult:
    """O(m^2) reference computation of m'(L); the oracle for the fast path.

    Guarded to m <= 2^14 to avoid accidental quadratic blowups.
    """
    if b.m > _BRUTEFORCE_LIMIT:
        raise ValueError(f"brute force limited to m <= {_BRUTEFORCE_LIMIT}, got {b.m}")
    lengths = b.lengths
    best = (0, 1, 0, 0)
    for i in range(1, b.m + 1):
        total = 0
        biggest = 0
        for j in range(i, b.m + 1):
            l = lengths[j - 1]
            total += l
            if l > biggest:
                biggest = l
            if _better(total, biggest, i, j, best):
                best = (total, biggest, i, j)
    num, den, i, j = best
    return UniformityResult(Fraction(num, den), i, j)


def greedy_merge(b: BlockRepresentation, C: Union[float, Fraction]) -> MergePlan:
    """Merge blocks inside the m' witness interval into near-uniform lengths.

    With threshold T = M / (C - 1), where M is the largest block in the
    witness interval, consecutive blocks are greedily accumulated until the
    running sum reaches T; a trailing remainder below T is dropped.  Every
    merged block then lies in [T, T + M), which bounds max/min by C, and at
    least floor((1 - 1/C) * m'(L)) merged blocks are produced.  Both
    conclusions are asserted before returning.

    If the greedy loop produces no block at all (possible only when C is
    close to 1), the whole witness interval is returned as a single merged
    block so that the result remains a valid instance.
    """
    C = Fraction(C)
    if C <= 1:
        raise ValueError(f"merge ratio must exceed 1, got C={C}")
    uni = approximate_uniformity(b)
    i0, j0 = uni.i, uni.j
    M = max(b.lengths[i0 - 1 : j0])
    T = Fraction(M, 1) / (C - 1)

    cuts = [i0]
    merged: list[int] = []
    k = i0
    while k <= j0:
        if sum(b.lengths[k - 1 : j0]) < T:
            break
        total = 0
        while total < T:
            total += b.lengths[k - 1]
            k += 1
        merged.append(total)
        cuts.append(k)

    if not merged:
        merged = [sum(b.lengths[i0 - 1 : j0])]
        cuts = [i0, j0 + 1]

    plan = MergePlan(tuple(cuts), tuple(merged))
    plan.validate_against(b)

    floor_bound = int((1 - 1 / C) * uni.value)
    if plan.m < floor_bound:
        raise AssertionError(
            f"greedy merge produced {plan.m} blocks, below floor((1-1/C)m') = {floor_bound}"
        )
    if max(merged) > C * min(merged):
        raise AssertionError(
            f"merged lengths {merged} exceed ratio C={C}"
        )
    return plan


def family(kind: str, **params: int) -> BlockRepresentation:
    """Named instance families.

    ``ones(m)``
        m unit blocks: the fully selective instance.
    ``geometric(m)``
        doubling lengths (1, 2, 4, ..., 2^(m-1)); horizon 2^m - 1 but
        uniformity at most 2.
    ``cantor(k)``
        recursive middle-third layout with horizon 3^k and 2^(k+1) - 1
        blocks; uniformity exactly 3.
    ``separation(k, h)``
        recursive family with horizon (2k)^h and uniformity exactly 2k on
        which a tailored forecaster achieves error O(1/k); requires k >= 2.
    """
    if kind == "ones":
        m = _positive_param(params, "m")
        return BlockRepresentation((1,) * m)
    if kind == "geometric":
        m = _positive_param(params, "m")
        return BlockRepresentation(tuple(2 ** i for i in range(m)))
    if kind == "cantor":
        k = _positive_param(params, "k")
        lengths: tuple[int, ...] = (1, 1, 1)
        for level in range(2, k + 1):
            lengths = lengths + (3 ** (level - 1),) + lengths
        return BlockRepresentation(lengths)
    if kind == "separation":
        k = _positive_param(params, "k")
        h = _positive_param(params, "h")
        if k < 2:
            raise ValueError(f"separation family requires k >= 2, got k={k}")
        return BlockRepresentation(separation_lengths(k, h))
    raise ValueError(f"unknown family {kind!r}")


def separation_lengths(k: int, h: int) -> tuple[int, ...]:
    """Block lengths of the separation family (all-2k-uniform base, recursive)."""
    lengths: tuple[int, ...] = (1,) * (2 * k)
    for level in range(2, h + 1):
        scaled = tuple(l * (k - 1) for l in lengths)
        lengths = scaled + (2 * (2 * k) ** (level - 1),) + scaled
    return lengths


def infer_separation_params(b: BlockRepresentation) -> tuple[int, int] | None:
    """Recover (k, h) if ``b``'s lengths come from the separation family."""
    m = b.m
    h = 1
    while (1 << (h - 1)) <= m + 1:
        num = (m + 1) >> (h - 1)
        if num * (1 << (h - 1)) == m + 1 and num % 2 == 1 and num >= 5:
            k = (num - 1) // 2
            if b.lengths == separation_lengths(k, h):
                return k, h
        h += 1
    return None


def _positive_param(params: dict, name: str) -> int:
    if name not in params:
        raise ValueError(f"missing family parameter {name!r}")
    value = int(params[name])
    if value < 1:
        raise ValueError(f"family parameter {name} must be >= 1, got {value}")
    extra = set(params) - {name, "k", "h", "m"}
    if extra:
        raise ValueError(f"unexpected family parameters {sorted(extra)}")
    return value


# --- JSON instance files -------------------------------------------------

Instance = Union[StoppingTimeSet, BlockRepresentation]


def instance_to_json(obj: Instance) -> str:
    """Serialise an instance in its natural JSON form."""
    if isinstance(obj, StoppingTimeSet):
        return json.dumps({"n": obj.n, "stopping_times": list(obj.times)})
    return json.dumps({"blocks": list(obj.lengths), "origin": obj.origin})


def instance_from_json(text: str) -> BlockRepresentation:
    """Parse either JSON form; stopping-time form is converted to blocks."""
    data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError("instance JSON must be an object")
    if "stopping_times" in data:
        return to_blocks(StoppingTimeSet(int(data["n"]), tuple(data["stopping_times"])))
    if "blocks" in data:
        return BlockRepresentation(tuple(data["blocks"]), origin=int(data.get("origin", 0)))
    raise ValueError("instance JSON needs either 'stopping_times' or 'blocks'")


def load_instance(path) -> BlockRepresentation:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_json(fh.read())


def save_instance(obj: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(instance_to_json(obj))
        fh.write("\n")
