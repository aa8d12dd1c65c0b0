"""
Rearrangement and r.i. norms of step functions
==============================================

A signed step function is rearranged exactly, then measured in several
rearrangement-invariant norms. Each norm sees only the rearrangement.
"""
import math

import numpy as np

from rikit.funcrep import StepFunction, rearrange
from rikit.spaces import FundamentalFunction, SpaceDescriptor as S, fundamental_function, norm
from rikit.weights import Weight

# a signed function with a gap in its support
f = StepFunction([0, 1, 2, 3, 5], [1.0, -4.0, 0.0, 2.0])
fs = rearrange(f)
print("f  :", f)
print("f* :", fs)

# the level sets of |f| and f* have the same measure
for lam in (0.5, 1.5, 3.0):
    print(f"|{{|f| > {lam}}}| = {fs.level_measure(lam):g}")

spaces = [S.Lp(1), S.Lp(2), S.Lp(math.inf), S.LorentzPQ(2, 1), S.LorentzPQ(2, math.inf),
          S.LambdaOf(FundamentalFunction.power(0.5)), S.MOf(FundamentalFunction.power(0.5)),
          S.ClassicalLambda(Weight.power(-0.5), 2)]
print(f"\n{'space':>14s} {'||f||':>10s} {'||f*||':>10s}")
for sp in spaces:
    print(f"{sp.kind:>14s} {norm(sp, f):10.6f} {norm(sp, fs, assume_nonincreasing=True):10.6f}")

# the fundamental function is the norm of an indicator
t = np.array([0.5, 1.0, 4.0])
print("\nphi of L^{2,1} at", t, "=", fundamental_function(S.LorentzPQ(2, 1))(t))
