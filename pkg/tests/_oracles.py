"""Independent reference computations used to derive expected values in tests."""

import itertools

import numpy as np


def partitions(lo, hi):
    inner = range(lo + 1, hi)
    for k in range(hi - lo):
        for sub in itertools.combinations(inner, k):
            yield [lo, *sub, hi]


def brute_pvar(f, p, lo, hi):
    """max over all partitions of sum f(s, t)^p, and a maximiser."""
    best, arg = 0.0, [lo, hi]
    for part in partitions(lo, hi):
        v = sum(f(a, b) ** p for a, b in zip(part, part[1:]))
        if v > best:
            best, arg = v, part
    return best, arg


def riemann_second(values, lo, hi, refine=64):
    """Iterated integral of the linear interpolant by trapezoid sums on a refined grid."""
    v = np.asarray(values, dtype=float)
    pts = [v[lo]]
    for k in range(lo, hi):
        for r in range(1, refine + 1):
            pts.append(v[k] + (v[k + 1] - v[k]) * r / refine)
    pts = np.array(pts) - v[lo]
    out = np.zeros((v.shape[1], v.shape[1]))
    for a, b in zip(pts[:-1], pts[1:]):
        out += np.outer(0.5 * (a + b), b - a)
    return out


def brute_cov2d(R, rho, rows, cols):
    best = 0.0
    for rp in partitions(rows[0], rows[1]):
        for cp in partitions(cols[0], cols[1]):
            s = 0.0
            for a, b in zip(rp, rp[1:]):
                for c, e in zip(cp, cp[1:]):
                    s += abs(R[b, e] - R[a, e] - R[b, c] + R[a, c]) ** rho
            best = max(best, s)
    return best ** (1 / rho)


def greedy_by_definition(w, alpha, lo, hi):
    """Greedy times straight from the definition with pointwise control evaluations."""
    taus = [lo]
    while taus[-1] < hi:
        nxt = hi
        for u in range(taus[-1] + 1, hi + 1):
            if w(taus[-1], u) >= alpha:
                nxt = u
                break
        taus.append(nxt)
    return taus, max((i for i, t in enumerate(taus) if t < hi), default=0)
