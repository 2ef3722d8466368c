"""The limit object itself: geometric compound Poisson.

Clusters arrive as a unit-rate Poisson stream thinned by (1 - rho);
each carries a Geometric(1 - rho) multiplicity. Closed formulas exist
for the window Laplace transform, the per-multiplicity intensities, and
the distribution of the n-th point's position, so a simulated path of
the limit can be audited against itself.
"""
import numpy as np

import levelcross as lc

rho = 0.5
path = lc.simulate_geom_cpp(rho, 200_000.0, rng=404)
print(f"rho = {rho}: {path.times.size} clusters on [0, 2e5], "
      f"{int(path.multiplicities.sum())} points")

# multiplicity histogram vs the closed per-k intensities
kmax = 6
exp_counts = lc.levy_masses(rho, 200_000.0, kmax)
obs = np.bincount(path.multiplicities, minlength=kmax + 1)[1:kmax + 1]
print(f"\n{'k':>3} {'observed':>9} {'expected':>9}")
for k, (o, e) in enumerate(zip(obs, exp_counts), start=1):
    print(f"{k:3d} {o:9d} {e:9.1f}")

# window Laplace transform vs the closed form
masses = lc.window_masses(path, 1.0)
for z in (0.5, 1.0, 2.0):
    emp = np.exp(-z * masses).mean()
    print(f"E exp(-{z} M[0,1]): simulated {emp:.4f}, "
          f"closed {float(lc.laplace_count(rho, 1.0, z)):.4f}")

# position of the n-th point: closed geometric-mixture formulas exist
# through n = 3; beyond that the same law is evaluated by Monte Carlo
# on the limit process, with a standard error attached
print()
for n in (1, 2, 3):
    v = lc.gamma_law_cdf(rho, n, 2.0)
    print(f"P(point {n} arrives by s=2) = {v.value:.4f} (closed)")
v = lc.gamma_law_cdf(rho, 4, 2.0, n_mc=200_000, rng=404)
print(f"P(point 4 arrives by s=2) = {v.value:.4f} +- {v.se:.4f} (simulated)")
