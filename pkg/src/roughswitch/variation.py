"""Exact grid p-variation, rough path distances and 2D variation of covariances."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .control import ControlFn
from .lift import Level2RoughPath
from .paths import IntervalIdx, SamplePath, same_grid


@dataclass(frozen=True)
class VariationResult:
    value: float
    optimal_partition: list
    p: float

    @property
    def power(self) -> float:
        """The optimal partition sum, i.e. ``value ** p``."""
        return self.value ** self.p


def _check_p(p):
    if not p >= 1:
        raise ValueError(f"p-variation needs p >= 1, got {p}")


def _result(best, back, p, lo) -> VariationResult:
    total = float(best[-1])
    return VariationResult(total ** (1.0 / p), K.backtrack(back, lo), float(p))


def p_variation(f, p: float, iv) -> VariationResult:
    """p-variation of an arbitrary interval function ``f(i, j) >= 0`` over grid indices.

    Evaluates ``f`` on every pair in ``iv`` and runs the O(m^2) partition DP.
    """
    _check_p(p)
    lo, hi = int(iv[0]), int(iv[1])
    if hi < lo:
        raise IndexError(f"bad interval ({lo}, {hi})")
    m = hi - lo + 1
    fp = np.zeros((m, m))
    for i in range(m):
        if f(lo + i, lo + i) != 0:
            raise ValueError("interval function must vanish on the diagonal")
        for j in range(i + 1, m):
            v = float(f(lo + i, lo + j))
            if v < 0 or not np.isfinite(v):
                raise ValueError(f"interval function must be finite and >= 0, got {v}")
            fp[i, j] = v ** p
    best, back = K.dp_matrix(fp)
    return _result(best, back, p, lo)


def _as_values(x) -> np.ndarray:
    if isinstance(x, Level2RoughPath):
        x = x.base
    if isinstance(x, SamplePath):
        x = x.values
    x = np.asarray(x, dtype=np.float64)
    return np.ascontiguousarray(x[:, None] if x.ndim == 1 else x)


def _iv(n_steps, iv):
    if iv is None:
        return IntervalIdx(0, n_steps)
    lo, hi = int(iv[0]), int(iv[1])
    if not 0 <= lo <= hi <= n_steps:
        raise IndexError(f"interval ({lo}, {hi}) outside grid 0..{n_steps}")
    return IntervalIdx(lo, hi)


def path_p_variation(x, p: float, iv=None, other=None) -> VariationResult:
    """p-variation of a path's increments (of ``x - other`` when given)."""
    _check_p(p)
    z = _as_values(x)
    if other is not None:
        z = z - _as_values(other)
    lo, hi = _iv(len(z) - 1, iv)
    best, back = K.dp_level1(z, float(p), lo, hi)
    return _result(best, back, p, lo)


def _level2_arrays(rp: Level2RoughPath):
    return (np.ascontiguousarray(rp.prefix()),
            np.ascontiguousarray(rp.base.values - rp.base.values[0]))


def second_p_variation(rp: Level2RoughPath, q: float, iv=None,
                       other: Level2RoughPath | None = None) -> VariationResult:
    """q-variation of the interval function ``|XX_{s,t} - YY_{s,t}|`` (``YY = 0`` if omitted)."""
    _check_p(q)
    sx, x = _level2_arrays(rp)
    if other is None:
        sy, y = np.zeros_like(sx), np.zeros_like(x)
    else:
        _same(rp, other)
        sy, y = _level2_arrays(other)
    lo, hi = _iv(rp.n_steps, iv)
    best, back = K.dp_level2(sx, x, sy, y, float(q), lo, hi)
    return _result(best, back, q, lo)


def _same(a: Level2RoughPath, b: Level2RoughPath):
    if not same_grid(a.base, b.base) or a.d != b.d:
        raise ValueError("rough paths must share grid and dimension")


def rough_distance_homog(X: Level2RoughPath, Y: Level2RoughPath, p: float, iv=None) -> float:
    """``||X - Y||_{p-var}^p + ||XX - YY||_{p/2-var}^{p/2}``."""
    _same(X, Y)
    first = path_p_variation(X, p, iv, other=Y)
    second = second_p_variation(X, p / 2, iv, other=Y)
    return first.power + second.power


def rho_pvar_metric(X: Level2RoughPath, Y: Level2RoughPath, p: float, iv=None) -> float:
    """Inhomogeneous metric ``max(||X - Y||_{p-var}, ||XX - YY||_{p/2-var})``."""
    _same(X, Y)
    first = path_p_variation(X, p, iv, other=Y)
    second = second_p_variation(X, p / 2, iv, other=Y)
    return max(first.value, second.value)


def _rough_control(X: Level2RoughPath, Y: Level2RoughPath | None, p: float) -> ControlFn:
    if not p >= 2:
        raise ValueError(f"rough path controls need p >= 2, got {p}")
    z = _as_values(X)
    sx, x = _level2_arrays(X)
    if Y is None:
        sy, y = np.zeros_like(sx), np.zeros_like(x)
    else:
        _same(X, Y)
        z = z - _as_values(Y)
        sy, y = _level2_arrays(Y)
    p = float(p)

    def scan(i, hi):
        b1, _ = K.dp_level1(z, p, i, hi)
        b2, _ = K.dp_level2(sx, x, sy, y, p / 2, i, hi)
        return b1 + b2

    return ControlFn(X.times, scan)


def pvar_control(rp: Level2RoughPath, p: float) -> ControlFn:
    """``omega(s, t) = ||X||_{p-var;[s,t]}^p + ||XX||_{p/2-var;[s,t]}^{p/2}``."""
    return _rough_control(rp, None, p)


def distance_control(X: Level2RoughPath, Y: Level2RoughPath, p: float) -> ControlFn:
    """``omega(s, t) = ||X - Y||_{p-var;[s,t]}^p`` in the homogeneous sense above."""
    return _rough_control(X, Y, p)


# 2D variation of covariances --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CovGrid:
    times: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=np.float64)
        t = np.array(self.times, dtype=np.float64)
        if R.shape != (t.size, t.size):
            raise ValueError("covariance must be square and match the grid")
        if not np.allclose(R, R.T, rtol=0, atol=1e-12):
            raise ValueError("covariance is not symmetric")
        if t.size <= 2048 and np.linalg.eigvalsh(R).min() < -1e-10:
            raise ValueError("covariance is not positive semidefinite")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "times", t)

    def rect_increment(self, s, t, s2, t2) -> float:
        R = self.R
        return float(R[t, t2] - R[s, t2] - R[t, s2] + R[s, s2])


@dataclass(frozen=True)
class Cov2DVariation:
    value: float
    exact: bool
    row_partition: list = field(default_factory=list)
    col_partition: list = field(default_factory=list)

    def __float__(self):
        return self.value


def _dp_given_rows(R, rows, cols, rho):
    """Best column partition (within ``cols``) for a fixed row partition."""
    A = R[np.ix_(rows, cols)]
    D = A[1:] - A[:-1]                               # (pieces, m_c)
    g = (np.abs(D[:, None, :] - D[:, :, None]) ** rho).sum(axis=0)   # g[c, e]
    g = np.triu(g, 1)
    best, back = K.dp_matrix(np.ascontiguousarray(g))
    part = [cols[k] for k in K.backtrack(back, 0)]
    return float(best[-1]), part


def cov_2d_variation(R: CovGrid, rho: float, rect=None, *, exact: bool | None = None,
                     exact_max: int = 12, max_sweeps: int = 50) -> Cov2DVariation:
    """2D rho-variation of the rectangular increments of ``R`` over ``rect``.

    Exact mode enumerates every row partition and solves the column partition
    by DP for each, which equals the sup over all partition pairs. Sides longer
    than ``exact_max`` points fall back to alternating row/column DPs started
    from the finest partitions; that value is a lower bound (``exact=False``).
    """
    if not rho >= 1:
        raise ValueError(f"rho must be >= 1, got {rho}")
    n = R.times.size - 1
    if rect is None:
        rect = ((0, n), (0, n))
    (a, b), (c, e) = _iv(n, rect[0]), _iv(n, rect[1])
    if a == b or c == e:
        return Cov2DVariation(0.0, True, [a, b], [c, e])
    rows, cols = list(range(a, b + 1)), list(range(c, e + 1))
    small = max(len(rows), len(cols)) <= exact_max
    if exact is None:
        exact = small
    if exact and not small:
        raise ValueError(f"rectangle sides exceed exact_max={exact_max} points")
    if len(rows) > len(cols):
        res = cov_2d_variation(CovGrid(R.times, R.R.T), rho, ((c, e), (a, b)), exact=exact,
                               exact_max=exact_max, max_sweeps=max_sweeps)
        return Cov2DVariation(res.value, res.exact, res.col_partition, res.row_partition)
    RR = R.R
    if exact:
        best_val, best_rows, best_cols = -1.0, None, None
        interior = rows[1:-1]
        for k in range(len(interior) + 1):
            for sub in itertools.combinations(interior, k):
                rp = [a, *sub, b]
                val, cp = _dp_given_rows(RR, rp, cols, rho)
                if val > best_val:
                    best_val, best_rows, best_cols = val, rp, cp
        return Cov2DVariation(best_val ** (1 / rho), True, best_rows, best_cols)
    col_part, row_part = cols, rows
    val = -1.0
    for _ in range(max_sweeps):
        v_rows, row_part = _dp_given_rows(RR.T, col_part, rows, rho)
        v_cols, col_part = _dp_given_rows(RR, row_part, cols, rho)
        if v_cols <= val:
            break
        val = v_cols
    return Cov2DVariation(max(val, v_rows) ** (1 / rho), False, row_part, col_part)
