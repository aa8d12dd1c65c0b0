"""
Lorentz-Orlicz spaces
=====================

Growth indices of a spliced power, the condition (A_phi), the modular
Hardy inequality and the Luxemburg norm.
"""
import numpy as np

from rikit.funcrep import StepFunction
from rikit.orlicz import (OrliczFunction, check_a_phi, decide_prop9, hardy_luxemburg,
                          lemma3_improve, luxemburg_norm, modular_hardy_check, simonenko)
from rikit.weights import Weight

phi = OrliczFunction.spliced([(2.0,), (1.0, 3.0)])   # t^2 below 1, t^3 above
ix = simonenko(phi, 0.5)
print(f"indices on [0.5, inf): p={ix.p_T:g} q={ix.q_T:g}; on (0, inf): p={ix.p_0:g} q={ix.q_0:g}")

w = Weight.power(-0.5)
rep = check_a_phi(w, phi)
print(f"A_phi for x^-1/2: holds={rep.holds} constant={rep.constant:.4f} via {rep.details['route']}")

res = lemma3_improve(w, phi, rep.constant)
print(f"exponent improvement: alpha={res.alpha:.4f} in {np.round(res.interval, 4)}, psi passes={res.passes}")

mh = modular_hardy_check(w, phi, samples=200, seed=3)
print(f"modular Hardy: sup ratio {mh.sup_ratio:.4f}, certified {mh.certified_constant}")

f = StepFunction([0, 1, 4], [3.0, 1.0], monotone="nonincreasing")
print(f"||f|| = {luxemburg_norm(w, phi, f):.6f}, ||Hf|| = {hardy_luxemburg(w, phi, f):.6f}")

for beta in (0.5, 3.0):
    r = decide_prop9(Weight.power(beta), phi, samples=20, seed=1)
    print(f"Hardy on Lambda(x^{beta:g}, phi): predicted {r.predicted_bounded}, "
          f"sampled {r.sampled['verdict']}")
