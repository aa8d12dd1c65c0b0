"""
Weight conditions with exact tails
==================================

For power weights the (AM_q) constant has a closed form, so the checker
can be compared against it. A spliced weight shows the probe curve.
"""
import math

from rikit.funcrep import PowerPiecewise
from rikit.spaces import FundamentalFunction, SpaceDescriptor as S
from rikit.weights import Weight, check_a1, check_am_q, check_cond22, check_cond24

# (AM_q) for w = x^beta holds exactly when beta + 1 < q
for beta, q in [(0.5, 2.0), (1.0, 2.0), (1.0, 1.0), (-0.5, 1.0)]:
    r = check_am_q(Weight.power(beta), q)
    want = (beta + 1) / (q - beta - 1) if beta + 1 < q else math.inf
    print(f"beta={beta:5.2f} q={q:g}: holds={r.holds!s:5s} constant={r.constant:.6g} "
          f"closed form={want:.6g} {r.divergence or ''}")

# a weight that is flat on [0, 1) and linear beyond
w = Weight(PowerPiecewise([0, 1, math.inf], [[(1, 0, 0)], [(1, 1, 0)]]))
r = check_am_q(w, 3.0)
t, ratio = r.curve
i = max(range(len(ratio)), key=ratio.__getitem__)
print(f"\nspliced weight, q=3: constant {r.constant:.6f} attained near t={t[i]:.3g}")

# the quasi-increasing condition and the Lorentz-target conditions
print("A1 for x^0.3:", check_a1(Weight.power(0.3)).constant)
print("cond22 w=x^-1/2, q=2, phi=t^(1/2):", check_cond22(Weight.power(-0.5), 2, FundamentalFunction.power(0.5)).holds)
print("cond24 w=x^0.5 into L^{2,inf}:", check_cond24(Weight.power(0.5), S.LorentzPQ(2, math.inf)).constant)
