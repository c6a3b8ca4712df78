"""Error versus instance size: the shape of the achievable-error frontier.

Exact evaluation makes the trends visible without sampling noise: on m
uniform blocks the uniform forecaster's error decays like 1/log m against
both adversaries, while the doubling family pins every forecaster at a
constant because its uniformity never grows.
"""

from fractions import Fraction

import pls

print(f"{'m':>6} {'bernoulli':>12} {'tree':>12} {'~4/(log2 m)/4':>14}")
for k in range(2, 11):
    m = 2 ** k
    b = pls.family("ones", m=m)
    dist = pls.uniform_forecast_distribution(b)
    bern = pls.exact_expected_error(b, dist, pls.bernoulli_block_model(m))
    tree = pls.exact_expected_error(b, dist, pls.tree_model_moments(pls.build_tree(b)))
    print(f"{m:>6} {float(bern.mean):>12.5f} {tree.mean:>12.5f} {1 / k:>14.5f}")

# Exact identity on uniform blocks: the fair-coin error is exactly
# (1 - 2^-k)/k, i.e. it meets the (4/k) E[phi(mean)] guarantee with equality.
print("\nexact fair-coin error vs the guarantee:")
for k in (2, 5, 10):
    m = 2 ** k
    b = pls.family("ones", m=m)
    err = pls.exact_expected_error(
        b, pls.uniform_forecast_distribution(b), pls.bernoulli_block_model(m)
    ).mean
    bound = Fraction(4, k) * pls.bernoulli_phi_expectation(b)
    print(f"  k={k:2d}: error {err} vs bound {bound} (equal: {err == bound})")

# The doubling family: m grows, the error floor does not move.
print("\nconstant error floor on the doubling family:")
for m in (4, 8, 16):
    b = pls.family("geometric", m=m)
    report = pls.variance_lower_bound_report(b)
    print(f"  geometric({m:2d}): certified floor {float(report.measured):.4f} "
          f"(>= 1/64 = {1 / 64:.4f})")

# The separation family: uniformity 2k but error ~ 1/k via its dedicated
# forecaster, showing the complexity measure is not the whole story.
print("\nseparation family, measured by Monte Carlo (50k trials):")
for k, h in [(4, 4), (8, 8)]:
    b = pls.family("separation", k=k, h=h)
    est = pls.monte_carlo_error(
        pls.make_separation_forecaster(b), pls.BernoulliBlockSampler(b).stream,
        trials=50_000, master_seed=9,
    )
    bound = 4 * float(pls.bernoulli_phi_expectation(b)) / h + 4 / k
    print(f"  k={k}, h={h} (m'={2 * k}, n={b.n}): "
          f"error {est.mean:.4f} +- {est.std_error:.4f} <= {bound:.4f}")
