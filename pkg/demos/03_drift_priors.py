"""Distill a price history into a discrete drift prior.

The planner does not know the drift.  It carries a finite set of drift
hypotheses ("atoms") with weights — here built by slicing the lookback
window into disjoint sub-windows and recording each sub-window's
annualized drift estimate.  A clamp keeps outlier atoms inside a box.
"""

import numpy as np

from drmerton import MarketSpec, SinusoidalDriftSpec, build_prior, drift_at, simulate_paths
from drmerton.priors import WindowingSpec, clamp_atoms

d = 2
dt = 1.0 / 252.0
n_steps = 2520  # ten years of daily data
market = MarketSpec(d=d, r=0.01, sigma=0.3 * np.eye(d), T=n_steps * dt, dt=dt)
drift = SinusoidalDriftSpec.sample(B0=0.4, d=d, mean=0.0, std=1.0, seed=3)
path = simulate_paths(market, drift, n_steps=n_steps, seed=3)

windowing = WindowingSpec(mode="consecutive", window_len=252, n_windows=10)
prior = build_prior(path.prices, market, windowing)

print(f"{prior.n_atoms} atoms from {windowing.n_windows} disjoint {windowing.window_len}-day windows")
print("weights:", np.round(prior.weights, 3))
print("atoms (annualized drift per window):")
for k in range(prior.n_atoms):
    print(f"  window {k}: {np.round(prior.atoms[k], 3)}")

print()
print("time-averaged true drift over the lookback:", np.round(
    np.mean([drift_at(drift, t) for t in np.linspace(0, market.T, 1000)], axis=0), 3))

clamped = clamp_atoms(prior, (-0.5, 0.5))
print()
print("after clamping to [-0.5, 0.5]: max |atom| =", np.max(np.abs(clamped.atoms)))
