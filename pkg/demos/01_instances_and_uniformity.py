"""Instance encodings and the approximate-uniformity measure.

A prediction instance is a horizon n plus the set of timesteps where a
forecast may start.  The equivalent block view records the gaps between
consecutive stopping times; approximate uniformity m' measures how close
some stretch of blocks is to being uniform, and it is the quantity that
controls the achievable prediction error.
"""

from fractions import Fraction

import pls

# The two encodings convert back and forth.  A stopping set that skips the
# early timesteps is normalised through an origin shift.
ts = pls.StoppingTimeSet(n=7, times=(2, 3))
blocks = pls.to_blocks(ts)
print("stopping times", ts.times, "->", blocks)
print("round trip:", pls.from_blocks(blocks) == ts)
print()

# Approximate uniformity is an exact rational with a witness interval.
for label, b in [
    ("fully selective, 8 steps", pls.family("ones", m=8)),
    ("two uneven blocks", pls.BlockRepresentation((5, 9))),
    ("doubling blocks", pls.family("geometric", m=6)),
    ("middle-third layout", pls.family("cantor", k=3)),
    ("separation family", pls.family("separation", k=3, h=2)),
]:
    uni = pls.approximate_uniformity(b)
    print(f"{label:28s} m={b.m:3d} n={b.n:4d}  m' = {uni.value} "
          f"~ {float(uni.value):.3f}  witness blocks {uni.i}..{uni.j}")
print()

# The doubling family keeps m' below 2 no matter how many blocks it has,
# which is why no forecaster can do well on it: the instance never contains
# a long, roughly uniform stretch.
for m in (4, 8, 16, 32):
    value = pls.approximate_uniformity(pls.family("geometric", m=m)).value
    print(f"geometric({m:2d}): m' = {value} = 2 - 2^(1-m)")
print()

# Greedy merging turns any instance into one with near-uniform blocks while
# keeping about (1 - 1/C) m' of them; this is the bridge from the general
# forecaster to the uniform-block analysis.
b = pls.BlockRepresentation((1, 2, 3, 4, 5, 6))
for C in (Fraction(3, 2), 2, 4):
    plan = pls.greedy_merge(b, C)
    ratio = max(plan.merged_lengths) / min(plan.merged_lengths)
    print(f"C={float(C):.1f}: merged lengths {plan.merged_lengths} "
          f"(max/min = {ratio:.2f}, kept {plan.m} blocks)")
