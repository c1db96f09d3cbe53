"""
Scaled cumulant generating function and rate function
=====================================================

For a primitive chain the empirical measure of length-m output strings
satisfies a large deviation principle.  The SCGF F(t) is the log of the
spectral radius of a tilted extension of the transition operator,
restricted to the supports of the boundary operator; the rate function is
its Legendre-Fenchel transform I(x) = sup_t { <t,x> - F(t) }.
"""

import math

import numpy as np

from qmcstats import ScgfEvaluator, example_model, rate_function

# example2 at omega = pi/2: level-1 statistics are an i.i.d. fair coin,
# so every analytic quantity has a closed form to compare against
coin = example_model("example2", math.pi / 2)
ev = ScgfEvaluator(coin, 1)

print("SCGF along t = (s, 0)  [closed form log((e^s+1)/2)]:")
for s in np.linspace(-2.0, 2.0, 9):
    f = ev.value([s, 0.0])
    print(f"  s = {s:+.1f}   F = {f:+.6f}   error {f - math.log((math.exp(s)+1)/2):+.1e}")

# the gradient of F at the optimum tilt reproduces the queried point x;
# the rate function value matches log 2 + x log x + (1-x) log(1-x)
print("\nrate function on the simplex  [fair-coin closed form]:")
for x0 in (0.1, 0.3, 0.5, 0.7, 0.9):
    pt = rate_function(coin, 1, [x0, 1.0 - x0])
    closed = math.log(2) + x0 * math.log(x0) + (1 - x0) * math.log(1 - x0)
    print(f"  x = ({x0:.1f}, {1-x0:.1f})   I = {pt.value:.8f}   "
          f"error {pt.value - closed:+.1e}   converged {pt.converged}")

# away from special points there is no closed form, but duality still
# holds: x(s) = grad F(s u) and I(x(s)) = <s u, x(s)> - F(s u) trace the
# rate curve exactly, without running the inner optimization
fam = example_model("example2", math.pi / 3)
ev3 = ScgfEvaluator(fam, 2)
u = np.array([1.0, -1.0, -1.0, 1.0])
print("\nlevel-2 rate samples along the parity slice (omega = pi/3):")
for s in (-1.0, -0.5, 0.0, 0.5, 1.0):
    f, grad = ev3.value_and_gradient(s * u)
    rate = s * float(u @ grad) - f
    print(f"  s = {s:+.1f}   x = {np.round(grad, 4)}   I = {rate:.6f}")
