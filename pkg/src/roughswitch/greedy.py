"""Greedy partitions of a control and the counting functional ``N_alpha``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import ControlFn
from .lift import Level2RoughPath
from .variation import distance_control, pvar_control


@dataclass(frozen=True)
class GreedyResult:
    taus: list
    n_alpha: int
    alpha: float


def _first_crossing(w: ControlFn, start: int, hi: int, alpha: float, window: int) -> int | None:
    """Smallest ``u > start`` with ``w(start, u) >= alpha``; scans grow geometrically."""
    window = max(window, 8)
    while True:
        end = min(start + window, hi)
        ws = w.scan(start, end)
        hit = np.flatnonzero(ws[1:] >= alpha)
        if hit.size:
            return start + 1 + int(hit[0])
        if end == hi:
            return None
        window *= 2


def greedy_sequence(w: ControlFn, alpha: float, iv=None) -> GreedyResult:
    """Greedy sequence restricted to grid points.

    ``tau_{i+1}`` is the first grid index after ``tau_i`` where the control
    reaches ``alpha`` (or ``hi`` when it never does). ``n_alpha`` is the largest
    ``n`` with ``tau_n < hi``, i.e. the number of completed alpha-steps.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    lo, hi = (0, w.n_steps) if iv is None else (int(iv[0]), int(iv[1]))
    if not 0 <= lo <= hi <= w.n_steps:
        raise IndexError(f"interval ({lo}, {hi}) outside grid")
    taus = [lo]
    window = 64
    while taus[-1] < hi:
        u = _first_crossing(w, taus[-1], hi, alpha, window)
        if u is None:
            taus.append(hi)
            break
        window = 2 * (u - taus[-1])
        taus.append(u)
    n_alpha = max(sum(1 for t in taus if t < hi) - 1, 0)
    return GreedyResult(taus, n_alpha, float(alpha))


def n_alpha(w: ControlFn, alpha: float, iv=None) -> int:
    return greedy_sequence(w, alpha, iv).n_alpha


def check_subadditivity(w: ControlFn, alpha: float, partition) -> tuple[bool, int]:
    """``N_{[s,t]} >= sum_k N_{[p_k, p_{k+1}]}``; returns (holds, slack)."""
    part = [int(k) for k in partition]
    if len(part) < 2 or any(b <= a for a, b in zip(part, part[1:])):
        raise ValueError("partition must be strictly increasing with at least two points")
    if part[0] < 0 or part[-1] > w.n_steps:
        raise IndexError("partition outside grid")
    total = n_alpha(w, alpha, (part[0], part[-1]))
    pieces = sum(n_alpha(w, alpha, (a, b)) for a, b in zip(part, part[1:]))
    slack = total - pieces
    return slack >= 0, slack


def check_doubling(w1: ControlFn, w2: ControlFn, alpha: float, iv=None) -> tuple[bool, int, int]:
    """``N(w1 + w2) <= 2 N(w1) + 2 N(w2) + 2``; returns (holds, lhs, rhs)."""
    lhs = n_alpha(w1 + w2, alpha, iv)
    rhs = 2 * n_alpha(w1, alpha, iv) + 2 * n_alpha(w2, alpha, iv) + 2
    return lhs <= rhs, lhs, rhs


@dataclass(frozen=True)
class TailInclusion:
    holds: bool
    lhs: int
    rhs: int


def check_tail_inclusion(X: Level2RoughPath, Xl: Level2RoughPath, p: float, alpha: float,
                         iv=None) -> TailInclusion:
    """``N_alpha(||Xl||^p) <= N_{alpha / 2^(p-1)}(||X||^p + ||X - Xl||^p)`` on one sample."""
    lhs = n_alpha(pvar_control(Xl, p), alpha, iv)
    combined = pvar_control(X, p) + distance_control(X, Xl, p)
    rhs = n_alpha(combined, alpha / 2 ** (p - 1), iv)
    return TailInclusion(lhs <= rhs, lhs, rhs)


@dataclass(frozen=True)
class TailFit:
    thresholds: np.ndarray
    log_survival: np.ndarray
    exceedances: np.ndarray
    q: float
    slope: float          # of log P(N > u) against u^(2/q); negative for a decaying tail
    intercept: float
    r2: float

    @property
    def c(self) -> float:
        """Fitted constant in ``P(N > u) ~ exp(-c u^(2/q))``."""
        return -self.slope

    def to_dict(self) -> dict:
        return {
            "thresholds": self.thresholds.tolist(),
            "log_survival": self.log_survival.tolist(),
            "exceedances": self.exceedances.tolist(),
            "q": self.q, "slope": self.slope, "c": self.c,
            "intercept": self.intercept, "r2": self.r2,
        }


class DegenerateTail(ValueError):
    pass


def survival(samples) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integer thresholds, ``P(N > u)`` and exceedance counts."""
    s = np.asarray(samples)
    u = np.arange(0, int(s.max()) + 1)
    counts = (s[None, :] > u[:, None]).sum(axis=1) if s.size < 200_000 else np.array(
        [(s > k).sum() for k in u])
    return u, counts / s.size, counts


def fit_tail(samples, q: float = 1.0, *, min_samples: int = 1000,
             min_exceed: int = 30) -> TailFit:
    """Least-squares fit of ``log P(N > u)`` against ``u^(2/q)`` at well-populated thresholds."""
    s = np.asarray(samples)
    if s.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {s.size}")
    if not q > 0:
        raise ValueError("q must be positive")
    if np.all(s == s.flat[0]):
        raise DegenerateTail("all samples equal")
    u, surv, counts = survival(s)
    keep = counts >= min_exceed
    if keep.sum() < 2:
        raise DegenerateTail("fewer than two thresholds with enough exceedances")
    x = u[keep].astype(float) ** (2.0 / q)
    y = np.log(surv[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return TailFit(u, np.log(np.where(surv > 0, surv, np.nan)), counts, float(q),
                   float(slope), float(intercept), r2)
