"""
Intermediate spaces of a couple
===============================

Sampling the couple operator Q on a candidate pair either stays below the
certified constant or produces a function whose ratio blows up.
"""
import math

from rikit.operators import test_membership
from rikit.spaces import CoupleDescriptor, FundamentalFunction, SpaceDescriptor as S
from rikit.weights import Weight

couple = CoupleDescriptor(S.Lp(2), S.LorentzPQ(2, math.inf))
print("hypotheses:", couple.flags)

# the couple itself: Q maps L^2 into weak L^2 with constant one
r = test_membership(couple, (couple.A0, couple.A1), 60, seed=1)
print(f"(L2, L2weak): {r.verdict}, sup ratio {r.sup_ratio:.6f}")

# a classical Lorentz space inside the range
cand = S.ClassicalLambda(Weight.power(-0.5), 3)
r = test_membership(couple, (cand, cand), 60, seed=1)
print(f"Lambda(x^-1/2, 3): {r.verdict}, sup {r.sup_ratio:.4f} <= certified {r.certified_constant:.4f}")

# L^2 itself is not preserved: Q of an indicator decays like t^(-1/2)
r = test_membership(couple, (couple.A0, couple.A0), 20, seed=1)
print(f"(L2, L2): {r.verdict}, witness {r.witness}")

ph = FundamentalFunction.power(0.5)
r = test_membership(CoupleDescriptor(S.LambdaOf(ph), S.MStarOf(ph)),
                    (S.ClassicalLambda(Weight.power(0.0), 4),) * 2, 60, seed=2)
print(f"restricted couple, Lambda(1, 4): {r.verdict}, sup {r.sup_ratio:.4f}")
