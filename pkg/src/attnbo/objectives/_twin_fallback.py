"""Pure-Python twin integrator, used when the compiled kernel is unavailable.

Mirrors ``_twin_kernel.pyx`` expression by expression so both produce
bit-identical traces.
"""

import math

import numpy as np


def integrate(alpha, beta, lam, w_amb, t_mean, nu, amb, solar, occ, t0, w0, dt_h, stride, n_samples):
    a1, a2, a3 = (float(v) for v in alpha)
    b1, b2, b3 = (float(v) for v in beta)
    l1, l2, l3 = (float(v) for v in lam)
    amb = amb.tolist()
    solar = solar.tolist()
    o1, o2, o3 = (row.tolist() for row in occ)
    out = np.empty((6, n_samples))
    T1 = T2 = T3 = float(t0)
    w1 = w2 = w3 = float(w0)
    k = 0
    bad = -1
    isfinite = math.isfinite
    for n in range(len(amb)):
        if n % stride == 0 and k < n_samples:
            out[:, k] = (T1, T2, T3, w1, w2, w3)
            if not all(isfinite(v) for v in (T1, T2, T3, w1, w2, w3)):
                bad = n
                break
            k += 1
        ta = t_mean + amb[n]
        s = solar[n]
        T1 = T1 + dt_h * (a1 * (ta - T1) + b1 * o1[n] + s)
        T2 = T2 + dt_h * (a2 * (ta - T2) + b2 * o2[n] + s)
        T3 = T3 + dt_h * (a3 * (ta - T3) + b3 * o3[n] + s)
        w1 = w1 + dt_h * (nu * (w_amb - w1) + l1 * o1[n])
        w2 = w2 + dt_h * (nu * (w_amb - w2) + l2 * o2[n])
        w3 = w3 + dt_h * (nu * (w_amb - w3) + l3 * o3[n])
    return out, bad
