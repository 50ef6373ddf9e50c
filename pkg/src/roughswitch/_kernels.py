"""Compiled dynamic-programming kernels for grid p-variation.

Each kernel runs the forward recursion ``best[j] = max_{lo<=i<j} best[i] + f(i, j)**p``
from a fixed left endpoint ``lo``, so ``best[j - lo]`` is the p-th power of the
p-variation over ``[lo, j]`` for every ``j`` at once.  Ties go to the partition
with fewer points.
"""

import numpy as np
from numba import njit


BLOCK = 32


@njit(cache=True)
def _better(val, cnt, idx, best_val, best_cnt, best_idx):
    if val != best_val:
        return val > best_val
    return cnt < best_cnt or (cnt == best_cnt and idx < best_idx)


@njit(cache=True)
def _dist1(z, j, i):
    s = 0.0
    for k in range(z.shape[1]):
        u = z[j, k] - z[i, k]
        s += u * u
    return s


@njit(cache=True)
def _block_balls(v, lo, nb):
    """Centre and radius of each full block of ``v[lo:]`` (flattened trailing axes)."""
    w = v.shape[1]
    cen = np.zeros((nb, w))
    rad = np.zeros(nb)
    for b in range(nb):
        a = lo + b * BLOCK
        for k in range(w):
            mn = v[a, k]
            mx = v[a, k]
            for i in range(a, a + BLOCK):
                mn = min(mn, v[i, k])
                mx = max(mx, v[i, k])
            cen[b, k] = 0.5 * (mn + mx)
        r = 0.0
        for i in range(a, a + BLOCK):
            s = 0.0
            for k in range(w):
                u = v[i, k] - cen[b, k]
                s += u * u
            r = max(r, s)
        rad[b] = np.sqrt(r)
    return cen, rad


@njit(cache=True)
def dp_level1(z, p, lo, hi):
    """Forward DP for ``f(i, j) = |z_j - z_i|`` (Euclidean).

    Full blocks of candidate left points are skipped when
    ``best[last of block] + (|z_j - centre| + radius)^p`` is strictly below the
    running optimum; ``best`` is non-decreasing, so this never drops a winner.
    """
    m = hi - lo + 1
    d = z.shape[1]
    best = np.zeros(m)
    back = np.zeros(m, dtype=np.int64)
    cnt = np.zeros(m, dtype=np.int64)
    nb = m // BLOCK
    cen, rad = _block_balls(z, lo, nb)
    hp = 0.5 * p
    for jj in range(1, m):
        j = lo + jj
        bv = -1.0
        bc = 0
        bi = 0
        full = jj // BLOCK               # blocks entirely left of jj
        for ii in range(full * BLOCK, jj):
            val = best[ii] + _dist1(z, j, lo + ii) ** hp
            c = cnt[ii] + 1
            if _better(val, c, ii, bv, bc, bi):
                bv, bc, bi = val, c, ii
        for b in range(full - 1, -1, -1):
            a = b * BLOCK
            s = 0.0
            for k in range(d):
                u = z[j, k] - cen[b, k]
                s += u * u
            if best[a + BLOCK - 1] + (np.sqrt(s) + rad[b]) ** p < bv:
                continue
            for ii in range(a, a + BLOCK):
                val = best[ii] + _dist1(z, j, lo + ii) ** hp
                c = cnt[ii] + 1
                if _better(val, c, ii, bv, bc, bi):
                    bv, bc, bi = val, c, ii
        best[jj] = bv
        cnt[jj] = bc
        back[jj] = bi
    return best, back


@njit(cache=True)
def _dist2(sx, x, sy, y, j, i):
    d = x.shape[1]
    s = 0.0
    for a in range(d):
        for b in range(d):
            u = (sx[j, a, b] - sx[i, a, b] - x[i, a] * (x[j, b] - x[i, b])) - (
                sy[j, a, b] - sy[i, a, b] - y[i, a] * (y[j, b] - y[i, b]))
            s += u * u
    return s


@njit(cache=True)
def dp_level2(sx, x, sy, y, p, lo, hi):
    """Forward DP for ``f(i, j) = |XX_{i,j} - YY_{i,j}|`` (Frobenius).

    ``sx`` holds prefix second levels ``XX_{0,j}`` and ``x`` the base values
    relative to ``x_0``, so ``XX_{i,j} = sx_j - sx_i - x_i (x) (x_j - x_i)``.
    Writing ``P_i = sx_i - sy_i - x_i (x) x_i + y_i (x) y_i`` gives
    ``f = |A_j - P_i - x_i (x) x_j + y_i (x) y_j|`` with ``A = sx - sy``, which
    a block of ``i`` bounds by ``f_centre + r_P + r_x |x_j| + r_y |y_j|``.
    """
    m = hi - lo + 1
    d = x.shape[1]
    n1 = x.shape[0]
    best = np.zeros(m)
    back = np.zeros(m, dtype=np.int64)
    cnt = np.zeros(m, dtype=np.int64)
    nb = m // BLOCK
    P = np.empty((n1, d * d))
    for i in range(lo, hi + 1):
        for a in range(d):
            for b in range(d):
                P[i, a * d + b] = (sx[i, a, b] - sy[i, a, b] - x[i, a] * x[i, b]
                                   + y[i, a] * y[i, b])
    cP, rP = _block_balls(P, lo, nb)
    cx, rx = _block_balls(x, lo, nb)
    cy, ry = _block_balls(y, lo, nb)
    hp = 0.5 * p
    for jj in range(1, m):
        j = lo + jj
        bv = -1.0
        bc = 0
        bi = 0
        full = jj // BLOCK
        for ii in range(full * BLOCK, jj):
            val = best[ii] + _dist2(sx, x, sy, y, j, lo + ii) ** hp
            c = cnt[ii] + 1
            if _better(val, c, ii, bv, bc, bi):
                bv, bc, bi = val, c, ii
        nxj = 0.0
        nyj = 0.0
        for a in range(d):
            nxj += x[j, a] * x[j, a]
            nyj += y[j, a] * y[j, a]
        nxj = np.sqrt(nxj)
        nyj = np.sqrt(nyj)
        for b in range(full - 1, -1, -1):
            a0 = b * BLOCK
            s = 0.0
            for a in range(d):
                for c2 in range(d):
                    u = (sx[j, a, c2] - sy[j, a, c2] - cP[b, a * d + c2]
                         - cx[b, a] * x[j, c2] + cy[b, a] * y[j, c2])
                    s += u * u
            bound = np.sqrt(s) + rP[b] + rx[b] * nxj + ry[b] * nyj
            if best[a0 + BLOCK - 1] + bound ** p < bv:
                continue
            for ii in range(a0, a0 + BLOCK):
                val = best[ii] + _dist2(sx, x, sy, y, j, lo + ii) ** hp
                c = cnt[ii] + 1
                if _better(val, c, ii, bv, bc, bi):
                    bv, bc, bi = val, c, ii
        best[jj] = bv
        cnt[jj] = bc
        back[jj] = bi
    return best, back


@njit(cache=True)
def dp_matrix(fp):
    """Forward DP over a dense matrix of already-powered values ``fp[i, j] = f(i, j)**p``."""
    m = fp.shape[0]
    best = np.zeros(m)
    back = np.zeros(m, dtype=np.int64)
    cnt = np.zeros(m, dtype=np.int64)
    for j in range(1, m):
        bv = -1.0
        bc = 0
        bi = 0
        for i in range(j):
            val = best[i] + fp[i, j]
            c = cnt[i] + 1
            if _better(val, c, i, bv, bc, bi):
                bv, bc, bi = val, c, i
        best[j] = bv
        cnt[j] = bc
        back[j] = bi
    return best, back


def backtrack(back, lo):
    """Partition indices (absolute) of the optimum ending at the last DP node."""
    out = [len(back) - 1]
    while out[-1] != 0:
        out.append(int(back[out[-1]]))
    return [lo + k for k in reversed(out)]
