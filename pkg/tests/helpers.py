"""Shared oracles for the test-suite."""

import math

import numpy as np


def central_difference(f, arr, h=1e-4, index=None):
    """Central finite-difference gradient of scalar ``f()`` w.r.t. ``arr`` (mutated in place).

    ``index`` restricts the probe to a list of flat indices; other entries
    are returned as NaN.
    """
    flat = arr.reshape(-1)
    out = np.full(flat.shape, np.nan)
    for i in range(flat.size) if index is None else index:
        old = flat[i]
        flat[i] = old + h
        up = f()
        flat[i] = old - h
        down = f()
        flat[i] = old
        out[i] = (up - down) / (2.0 * h)
    return out.reshape(arr.shape)


def relative_error(analytic, numeric):
    """Norm-wise relative error ||a - n|| / max(||a||, ||n||), 0 when both vanish."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    mask = ~np.isnan(n)
    a, n = a[mask], n[mask]
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - n) / scale)


def brute_force_attention(q, k, v, heads):
    """Straight-line multi-head attention: loops over heads, queries and keys."""
    nq, dm = q.shape
    nk = k.shape[0]
    dh = dm // heads
    out = np.zeros((nq, dm))
    for h in range(heads):
        cols = slice(h * dh, (h + 1) * dh)
        for i in range(nq):
            scores = [float(np.dot(q[i, cols], k[j, cols])) / math.sqrt(dh) for j in range(nk)]
            top = max(scores)
            w = [np.exp(s - top) for s in scores]
            total = sum(w)
            for j in range(nk):
                out[i, cols] += (w[j] / total) * v[j, cols]
    return out


def rk4_twin(theta, days, dt_s=1.0, gamma=1.5, amplitude=8.0, t0=20.0, w0=8.0):
    """Classical RK4 on the twin equations with continuous-time forcing.

    Returns a (6, days*96) array sampled every 15 minutes from t = 0.
    Written independently of the package integrator; used as a
    high-accuracy reference.
    """
    th = [float(v) for v in theta]
    alpha = (th[0] * 0.01, th[1] * 0.01, th[3] * 0.01)
    beta = (th[4], th[5], th[6])
    lam = (th[10], th[7], th[2])
    w_amb, t_mean, nu = th[8], th[9], th[11] * 0.1
    windows = ((300.0, 840.0), (510.0, 1080.0), (900.0, 1440.0))

    def rhs(t_h, state):
        hour = t_h % 24.0
        minute = hour * 60.0
        amb = t_mean + amplitude * math.sin(2.0 * math.pi * (hour - 9.0) / 24.0)
        sun = gamma * max(0.0, math.sin(math.pi * (hour - 6.0) / 12.0))
        out = [0.0] * 6
        for i in range(3):
            occ = 1.0 if windows[i][0] <= minute < windows[i][1] else 0.0
            out[i] = alpha[i] * (amb - state[i]) + beta[i] * occ + sun
            out[3 + i] = nu * (w_amb - state[3 + i]) + lam[i] * occ
        return out

    h = dt_s / 3600.0
    per_sample = int(round(900.0 / dt_s))
    n_samples = days * 96
    state = [t0] * 3 + [w0] * 3
    samples = np.empty((6, n_samples))
    step = 0
    for k in range(n_samples):
        samples[:, k] = state
        for _ in range(per_sample):
            t = step * h
            k1 = rhs(t, state)
            k2 = rhs(t + h / 2, [s + h / 2 * d for s, d in zip(state, k1)])
            k3 = rhs(t + h / 2, [s + h / 2 * d for s, d in zip(state, k2)])
            k4 = rhs(t + h, [s + h * d for s, d in zip(state, k3)])
            state = [s + h / 6 * (a + 2 * b + 2 * c + d) for s, a, b, c, d in zip(state, k1, k2, k3, k4)]
            step += 1
    return samples
