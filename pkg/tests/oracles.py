"""Independent reference computations used as test oracles.

None of these call into the package's solver; they work from the
objective ``||y - H b||^2 + sum_j w_j |b_j|`` directly.
"""
import numba
import numpy as np
from scipy.optimize import minimize

STEP = 1e-3
LIM = 3.0
N_GRID = int(round(2 * LIM / STEP)) + 1


def objective(H, y, w, b):
    res = y - H @ b
    return float(res @ res + np.sum(w * np.abs(b)))


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def _inner_lattice(a, lin, w):
    """Lattice minimizer of ``a b^2 + 2 lin b + w |b|`` over the grid, per entry of ``lin``.

    The function is convex in ``b``, so its lattice minimum sits at the floor
    or ceiling (on the grid) of the continuous minimizer.
    """
    if a <= 0:
        # flat in b apart from the linear/abs terms: the minimum is at an end or 0
        cands = np.stack([np.full_like(lin, -LIM), np.zeros_like(lin), np.full_like(lin, LIM)])
    else:
        b_star = soft_threshold(-lin, w / 2) / a
        k = np.floor((np.clip(b_star, -LIM, LIM) + LIM) / STEP)
        lo = np.clip(k, 0, N_GRID - 1) * STEP - LIM
        hi = np.clip(k + 1, 0, N_GRID - 1) * STEP - LIM
        cands = np.stack([lo, hi])
    vals = a * cands ** 2 + 2 * lin * cands + w * np.abs(cands)
    return vals.min(axis=0)


@numba.njit(cache=True)
def _lattice3(G, c, w):
    # exhaustive over (b1, b2); b3 by the floor/ceil rule of _inner_lattice
    best = np.inf
    a = G[2, 2]
    for i in range(N_GRID):
        b1 = i * STEP - LIM
        o1 = G[0, 0] * b1 * b1 - 2.0 * c[0] * b1 + w[0] * abs(b1)
        for j in range(N_GRID):
            b2 = j * STEP - LIM
            o2 = (o1 + G[1, 1] * b2 * b2 + 2.0 * G[0, 1] * b1 * b2 - 2.0 * c[1] * b2
                  + w[1] * abs(b2))
            lin = G[0, 2] * b1 + G[1, 2] * b2 - c[2]
            if a <= 0.0:
                v = min(a * LIM * LIM - 2.0 * lin * LIM + w[2] * LIM, 0.0,
                        a * LIM * LIM + 2.0 * lin * LIM + w[2] * LIM)
            else:
                z = -lin
                t = w[2] / 2.0
                st = z - t if z > t else (z + t if z < -t else 0.0)
                bs = min(max(st / a, -LIM), LIM)
                k = np.floor((bs + LIM) / STEP)
                v = np.inf
                for kk in (k, k + 1.0):
                    kk = min(max(kk, 0.0), N_GRID - 1.0)
                    b3 = kk * STEP - LIM
                    v = min(v, a * b3 * b3 + 2.0 * lin * b3 + w[2] * abs(b3))
            if o2 + v < best:
                best = o2 + v
    return best


def grid_min(H, y, w, chunk=500, fast=True):
    """Exact minimum of the objective over the lattice ``{-3, -2.999, ..., 3}^k``, k <= 3.

    The last coordinate is minimized in closed form on the lattice; the
    others are enumerated.
    """
    H = np.asarray(H, float)
    y = np.asarray(y, float)
    w = np.asarray(w, float)
    k = H.shape[1]
    G = H.T @ H
    c = H.T @ y
    base = float(y @ y)
    grid = np.linspace(-LIM, LIM, N_GRID)
    if k == 0:
        return base
    if k == 1:
        return base + float(_inner_lattice(G[0, 0], np.array([-c[0]]), w[0])[0])
    if k == 2:
        b1 = grid
        outer = G[0, 0] * b1 ** 2 - 2 * c[0] * b1 + w[0] * np.abs(b1)
        inner = _inner_lattice(G[1, 1], G[0, 1] * b1 - c[1], w[1])
        return base + float(np.min(outer + inner))
    if k == 3 and fast:
        return base + float(_lattice3(G, c, w))
    if k == 3:
        best = np.inf
        b2 = grid[None, :]
        for s in range(0, N_GRID, chunk):
            b1 = grid[s:s + chunk, None]
            outer = (G[0, 0] * b1 ** 2 + G[1, 1] * b2 ** 2 + 2 * G[0, 1] * b1 * b2
                     - 2 * c[0] * b1 - 2 * c[1] * b2 + w[0] * np.abs(b1) + w[1] * np.abs(b2))
            inner = _inner_lattice(G[2, 2], G[0, 2] * b1 + G[1, 2] * b2 - c[2], w[2])
            best = min(best, float(np.min(outer + inner)))
        return base + best
    raise ValueError("grid oracle supports at most three columns")


def box_min(H, y, w, lim=LIM):
    """Minimum over the box ``[-lim, lim]^k`` via the split ``b = u - v``, ``u, v >= 0``.

    The split turns the l1 term linear, so a bound-constrained quasi-Newton
    method solves it without touching the package's coordinate descent.
    The box minimum is a lower bound for the lattice minimum.
    """
    H = np.asarray(H, float)
    k = H.shape[1]

    def f(z):
        b = z[:k] - z[k:]
        res = y - H @ b
        g = -2 * H.T @ res
        return float(res @ res + w @ (z[:k] + z[k:])), np.r_[g + w, -g + w]

    out = minimize(f, np.zeros(2 * k), jac=True, method="L-BFGS-B",
                   bounds=[(0, lim)] * (2 * k), options={"ftol": 1e-15, "gtol": 1e-12,
                                                         "maxiter": 20000})
    return float(out.fun)
