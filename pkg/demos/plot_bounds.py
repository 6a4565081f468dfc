"""
Closed-form bounds and capacity
===============================

Exact values at the barycenter sit between e^-n sqrt(2) and n!/n^n.  When a
polytope point has exactly one positive eigenvalue, a lower bound holds for
every haf_k.  Capacity of (x^T B x)^k equals (2n)^k on the whole polytope.
"""

import numpy as np

from matchpoly.bounds import (
    asymptotics,
    capacity_estimate,
    hyperbolic_bound,
    inequality_chain,
    mu_upper_bound_cps,
    sampled_bound_check,
    stirling_bounds,
)
from matchpoly.polytope import random_member

for n in (2, 3, 5, 10, 20):
    ch = inequality_chain(n)
    a = asymptotics(n)
    print(f"n={n:2d}  {ch.lower:.3e} < {float(ch.middle):.3e} < {float(ch.right):.3e}  "
          f"holds={ch.holds}  ratios {a.ratio_haf:.4f} {a.ratio_perm:.4f}")

print("Stirling bracket of 10!:", stirling_bounds(10))

# Lower bounds versus random points.  Points failing the eigenvalue test
# are reported but not held to the bound.
rng = np.random.default_rng(2)
for n, k in [(3, 3), (3, 2), (4, 4)]:
    checks = sampled_bound_check(n, k, 40, rng)
    gated = [c for c in checks if c.applicable]
    print(f"n={n} k={k}: bound {hyperbolic_bound(n, k):.5f}, {len(gated)} gated samples, "
          f"smallest gated haf_k {min(c.value for c in gated):.5f}")

# Capacity.  u = 0 is already optimal for a doubly stochastic B.
for n, k in [(2, 2), (3, 1), (3, 3)]:
    est = capacity_estimate(random_member(2 * n, rng), k)
    print(f"n={n} k={k}: capacity {est.value:.10f}  (2n)^k = {(2 * n) ** k}")

print("known upper bound on mu:", mu_upper_bound_cps())
