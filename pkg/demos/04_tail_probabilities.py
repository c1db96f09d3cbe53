"""
Large-deviation tail probabilities
==================================

The rate function bounds rare-event probabilities: for a threshold a above
the stationary value, P(P_n[c] >= a) decays like exp(-n inf I) with the
infimum of I over the half-space { x : x_c >= a }.  Direct Monte Carlo
estimation of these tails is only feasible while n * rate stays small;
this demo shows both the analytic bound and the empirical decay rates
with Wilson confidence intervals.
"""

import math

import numpy as np

from qmcstats import example_model, ld_tail_estimate, tail_rate_bound

coin = example_model("example2", math.pi / 2)
psi0 = np.array([1.0, 0.0], dtype=complex)

# analytic bound as a function of the threshold
print("analytic tail rate inf { I(x) : x_0 >= a }:")
for a in (0.5, 0.55, 0.6, 0.7, 0.8, 0.9):
    bound = tail_rate_bound(coin, 1, 0, a)
    print(f"  a = {a:.2f}   rate = {bound.value:.6f}   argmin x = {np.round(bound.x, 4)}")

# empirical decay at a modest threshold: finite-n rates sit above the
# asymptote (the prefactor is polynomial in n) and drift toward it
a = 0.6
est = ld_tail_estimate(coin, psi0, 1, 0, a, n_list=(30, 60, 120, 240),
                       trials=40000, base_seed=12)
print(f"\nempirical rates at a = {a} (analytic {est.analytic.value:.6f}):")
for pt in est.points:
    if pt.rate is None:
        print(f"  n = {pt.n:4d}   no exceedances in {pt.trials} trials "
              f"(rate > {pt.rate_low:.4f} at 95%)")
    else:
        print(f"  n = {pt.n:4d}   hits {pt.hits:6d}   rate {pt.rate:.4f}   "
              f"95% CI [{pt.rate_low:.4f}, {pt.rate_high:.4f}]")
