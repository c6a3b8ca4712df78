"""The forecasting algorithms, run step by step on concrete sequences.

All forecasters observe a prefix of the sequence and predict the mean of a
window that starts at a permitted stopping time.  Their randomness is the
choice of scale: where to stand and how wide a window to commit to.
"""

import numpy as np

import pls

rng = np.random.default_rng(42)

# --- uniform-block forecaster ------------------------------------------------
# On 2^k near-uniform blocks it picks a random dyadic scale.  The outcome
# (i, j) means: stand at the start of block i, predict the next j blocks
# from the previous j.
b = pls.family("ones", m=8)
dist = pls.uniform_forecast_distribution(b)
print("outcome law on 8 unit blocks:")
for o in dist.outcomes:
    print(f"  start block {o.i}, half-window {o.j}: probability {o.probability}")

x = np.array([0.2, 0.2, 0.2, 0.2, 0.8, 0.8, 0.8, 0.8])
print("\nsequence", x)
for _ in range(3):
    stream = pls.ArrayStream(x)
    pred = pls.uniform_forecast(b, stream, rng)
    mu = stream.target_mean(pred.t, pred.w)
    print(f"  predicted {pred.mu_hat:.3f} for window (t={pred.t}, w={pred.w}); "
          f"actual {mu:.3f}, squared error {(pred.mu_hat - mu) ** 2:.4f}")

# --- general forecaster -------------------------------------------------------
# Arbitrary instances are first merged into near-uniform blocks (here
# (1,2,3,4,5,6) -> (6,9,6)), then the uniform forecaster runs on the merge.
b = pls.BlockRepresentation((1, 2, 3, 4, 5, 6))
x = np.linspace(0.1, 0.9, b.n)
stream = pls.ArrayStream(x)
pred = pls.general_forecast(b, stream, rng)
mu = stream.target_mean(pred.t, pred.w)
print(f"\ngeneral forecaster on {b.lengths}: t={pred.t}, w={pred.w}, "
      f"mu_hat={pred.mu_hat:.3f}, actual={mu:.3f}")

# --- separation forecaster ----------------------------------------------------
# The separation family has low error despite small m': its recursive
# structure admits a dedicated forecaster that predicts the right half of a
# recursion level from its left half, skipping the long middle block.
b = pls.family("separation", k=4, h=3)
x = rng.random(b.n)
stream = pls.ArrayStream(x)
pred = pls.separation_forecast(b, stream, rng)
mu = stream.target_mean(pred.t, pred.w)
print(f"\nseparation forecaster on k=4, h=3 (n={b.n}): t={pred.t}, w={pred.w}, "
      f"error {(pred.mu_hat - mu) ** 2:.5f}")

# No forecaster ever peeks past its own prediction point: the stream cursor
# stops at t.
print(f"values read: {stream.position} <= prediction point {pred.t}")
