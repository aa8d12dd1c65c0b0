"""
Hardy-type operators and the K-functional
=========================================

The iterates of q_x for L^p have a closed kernel form. This script
compares it with repeated application, sums the S-operator series and
checks that K(phi(t), f) sits between phi Q_X f and twice that.
"""
import numpy as np

from rikit.funcrep import StepFunction
from rikit.operators import (hardy, k_functional, q_p_apply, q_p_iterate, q_x, s_operator,
                             s_series)
from rikit.spaces import SpaceDescriptor as S

f = StepFunction([0, 0.5, 2, 6], [4.0, 1.5, 0.25], monotone="nonincreasing")
t = np.geomspace(0.1, 50, 6)
print("t        :", np.round(t, 4))
print("H f      :", np.round(hardy(f)(t), 6))
print("Q_X f, L2:", np.round(q_x(S.Lp(2), f)(t), 6))

for n in (1, 2, 3, 4):
    closed = np.asarray(q_p_iterate(2, n, f)(t))
    repeated = np.asarray(q_p_apply(2, n, f)(t))
    print(f"n={n}: max rel gap closed vs repeated = {np.max(np.abs(closed / repeated - 1)):.2e}")

eps = 0.4
closed = np.asarray(s_operator(2, eps, f)(t))
part = s_series(2, eps, f, 30)
print(f"\nS-operator, eps={eps}: tail bound {part.tail_bound:.2e}, "
      f"largest gap {np.max(closed**2 - np.asarray(part(t))**2):.2e}")

sp = S.Lp(2)
for s in (0.1, 1.0, 10.0):
    K = k_functional(sp, s**0.5, f).value
    lower = s**0.5 * q_x(sp, f)(np.array([s]))[0]
    print(f"t={s:5.1f}: K / (phi Q_X f) = {K / lower:.6f}")
