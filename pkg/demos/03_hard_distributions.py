"""The two adversarial input distributions and what they certify.

Both adversaries emit block-constant sequences, so a forecaster's exact
expected error against them reduces to a quadratic form in the block-mean
moments.  The fair-coin adversary certifies error at least 1/(16 m'^2); the
tree adversary certifies error at least of order 1/log m on every instance.
"""

import math

import numpy as np

import pls

rng = np.random.default_rng(7)

# --- fair-coin block adversary ------------------------------------------------
b = pls.family("ones", m=4)
model = pls.bernoulli_block_model(b.m)
print("fair-coin second moments on 4 blocks:")
print(np.asarray(model.second_moment, dtype=float))

est = pls.exact_expected_error(b, pls.uniform_forecast_distribution(b), model)
print(f"exact expected error of the uniform forecaster: {est.mean} "
      f"= {float(est.mean):.4f}")

mc = pls.monte_carlo_error(
    pls.make_uniform_forecaster(b), pls.BernoulliBlockSampler(b).stream,
    trials=50_000, master_seed=1,
)
print(f"Monte Carlo agrees: {mc.mean:.4f} +- {mc.std_error:.4f}\n")

# The certified floor: every window keeps variance at least 1/(16 m'^2).
for label, inst in [
    ("ones(8)", pls.family("ones", m=8)),
    ("geometric(6)", pls.family("geometric", m=6)),
    ("cantor(3)", pls.family("cantor", k=3)),
]:
    report = pls.variance_lower_bound_report(inst)
    print(f"{label:14s} min window variance {float(report.measured):.5f} "
          f">= bound {float(report.bound):.5f}: {report.satisfied}")
print()

# --- tree adversary -------------------------------------------------------------
# Blocks are organised into a tree; node values form a martingale whose
# per-edge noise is tuned so that every edge carries the same conditional
# variance budget (ln size(u) - ln size(v)) / (4 ln m).
b = pls.BlockRepresentation((1, 5, 1, 2))
tree = pls.build_tree(b)
print(f"tree over blocks {b.lengths}:")
for node in tree.nodes:
    pad = "  " * node.depth
    print(f"{pad}blocks {node.lo}..{node.hi}  sigma={node.sigma:.3f}")

report = pls.conditional_variance_check(tree)
print(f"edge variances match the formula to {report.max_deviation:.2e}")

sample = pls.sample_tree_values(tree, rng)
print("one sampled realisation of the block means:", sample.block_means)
print("rendered sequence:", pls.render_sequence(b, sample))

# The minimum window variance decays like 1/ln m on uniform blocks, not faster.
print("\nmin window variance under the tree adversary:")
for m in (4, 16, 64, 256):
    inst = pls.family("ones", m=m)
    var, (t, w) = pls.tree_min_window_variance(inst, pls.build_tree(inst))
    print(f"  m={m:4d}: {var:.5f}  (x ln m = {var * math.log(m):.4f}, "
          f"worst window t={t}, w={w})")
