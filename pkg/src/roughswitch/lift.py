"""Level-2 rough paths over a sample grid.

A :class:`Level2RoughPath` stores the base path and one second-level tensor per
grid step.  Second levels over longer grid intervals are rebuilt with Chen's
relation, so the object never holds the O(n^2) interval table.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .paths import IntervalIdx, SamplePath, increment, same_grid


class Flavor(str, enum.Enum):
    GEOMETRIC = "geometric"
    ITO = "ito"


@dataclass(frozen=True, eq=False)
class Level2RoughPath:
    base: SamplePath
    second_steps: np.ndarray
    flavor: Flavor = Flavor.GEOMETRIC

    def __post_init__(self):
        s = np.array(self.second_steps, dtype=np.float64)
        n, d = self.base.n_steps, self.base.d
        if s.shape != (n, d, d):
            raise ValueError(f"second_steps shape {s.shape}, expected {(n, d, d)}")
        if not np.all(np.isfinite(s)):
            raise ValueError("second_steps contains non-finite entries")
        s.setflags(write=False)
        object.__setattr__(self, "second_steps", s)
        object.__setattr__(self, "flavor", Flavor(self.flavor))

    @property
    def times(self) -> np.ndarray:
        return self.base.times

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def n_steps(self) -> int:
        return self.base.n_steps

    def prefix(self) -> np.ndarray:
        """``X_{0,t_j}``-second levels for every grid point, shape (n+1, d, d)."""
        x = self.base.values - self.base.values[0]
        dx = self.base.steps()
        inc = self.second_steps + x[:-1, :, None] * dx[:, None, :]
        out = np.zeros((self.n_steps + 1, self.d, self.d))
        np.cumsum(inc, axis=0, out=out[1:])
        return out

    def to_json(self, path=None) -> str:
        doc = {
            "flavor": self.flavor.value,
            "times": self.times.tolist(),
            "values": self.base.values.tolist(),
            "second_steps": self.second_steps.tolist(),
        }
        text = json.dumps(doc)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source) -> "Level2RoughPath":
        if isinstance(source, Path) or not str(source).lstrip().startswith("{"):
            source = Path(source).read_text()
        doc = json.loads(source)
        base = SamplePath(doc["times"], doc["values"])
        steps = np.array(doc["second_steps"], dtype=np.float64).reshape(base.n_steps, base.d,
                                                                         base.d)
        return cls(base, steps, Flavor(doc["flavor"]))


def lift_piecewise_linear(path: SamplePath) -> Level2RoughPath:
    """Canonical lift of the linear interpolant: each step carries ``1/2 dX (x) dX``."""
    if path.n_steps < 1:
        raise ValueError("cannot lift a path with no steps")
    dx = path.steps()
    return Level2RoughPath(path, 0.5 * dx[:, :, None] * dx[:, None, :], Flavor.GEOMETRIC)


def eval_second(rp: Level2RoughPath, iv) -> np.ndarray:
    """Second level over a grid interval by left-to-right Chen accumulation."""
    lo, hi = rp.base.check_interval(iv)
    if hi == lo:
        return np.zeros((rp.d, rp.d))
    v = rp.base.values
    run = v[lo:hi] - v[lo]
    dx = v[lo + 1:hi + 1] - v[lo:hi]
    return rp.second_steps[lo:hi].sum(axis=0) + run.T @ dx


def second_table(rp: Level2RoughPath) -> np.ndarray:
    """All interval second levels ``T[i, j]`` for i <= j; zeros below the diagonal."""
    n, d = rp.n_steps, rp.d
    v = rp.base.values
    dx = rp.base.steps()
    table = np.zeros((n + 1, n + 1, d, d))
    for i in range(n):
        inc = rp.second_steps[i:] + (v[i:-1] - v[i])[:, :, None] * dx[i:, None, :]
        np.cumsum(inc, axis=0, out=table[i, i + 1:])
    return table


@dataclass(frozen=True)
class ChenReport:
    ok: bool
    worst: float
    kind: str
    location: tuple

    def __bool__(self):
        return self.ok


def check_chen(rp: Level2RoughPath, tol: float = 1e-10, *, exhaustive_max: int = 200,
               n_random: int = 200_000, seed: int = 0) -> ChenReport:
    """Verify Chen's relation over grid index triples.

    Interval second levels come from the exhaustive table (route: per-left-endpoint
    cumulative sums) and are compared with the composition of the two halves.
    For geometric paths the group condition ``Sym(X_{s,t}) = 1/2 X_{s,t} (x) X_{s,t}``
    is also checked per step, which is where a corrupted step shows up.
    """
    n = rp.n_steps
    v = rp.base.values
    worst, kind, loc = 0.0, "chen", ()
    if n <= exhaustive_max:
        table = second_table(rp)
        for j in range(n + 1):
            # i ranges over 0..j, k over j..n
            a = table[: j + 1, j]                      # (j+1, d, d)
            b = table[j, j:]                           # (n-j+1, d, d)
            lhs = table[: j + 1, j:]                   # (j+1, n-j+1, d, d)
            xi = v[j] - v[: j + 1]
            xk = v[j:] - v[j]
            rhs = a[:, None] + b[None, :] + xi[:, None, :, None] * xk[None, :, None, :]
            err = np.abs(lhs - rhs).max(axis=(2, 3))
            m = float(err.max())
            if m > worst:
                ii, kk = np.unravel_index(int(err.argmax()), err.shape)
                worst, loc = m, (int(ii), j, int(j + kk))
    else:
        rng = np.random.default_rng(seed)
        tri = np.sort(rng.integers(0, n + 1, size=(n_random, 3)), axis=1)
        for i, j, k in tri:
            lhs = eval_second(rp, (i, k))
            rhs = (eval_second(rp, (i, j)) + eval_second(rp, (j, k))
                   + np.outer(v[j] - v[i], v[k] - v[j]))
            m = float(np.abs(lhs - rhs).max())
            if m > worst:
                worst, loc = m, (int(i), int(j), int(k))
    if rp.flavor is Flavor.GEOMETRIC:
        dx = rp.base.steps()
        sym = 0.5 * (rp.second_steps + rp.second_steps.transpose(0, 2, 1))
        err = np.abs(sym - 0.5 * dx[:, :, None] * dx[:, None, :]).max(axis=(1, 2))
        if err.size and err.max() > worst:
            k = int(err.argmax())
            worst, kind, loc = float(err[k]), "geometric", (k, k + 1)
    return ChenReport(worst <= tol, worst, kind, loc)


def to_ito(rp: Level2RoughPath) -> Level2RoughPath:
    """Itô lift of a Brownian geometric lift: subtract ``1/2 (t - s) I`` per step."""
    if rp.flavor is Flavor.ITO:
        return rp
    dt = np.diff(rp.times)
    steps = rp.second_steps - 0.5 * dt[:, None, None] * np.eye(rp.d)
    return Level2RoughPath(rp.base, steps, Flavor.ITO)


def restrict(rp: Level2RoughPath, indices) -> Level2RoughPath:
    """Coarsen onto a sub-grid; each new step carries the exact Chen product."""
    idx = np.asarray(indices, dtype=np.intp)
    if idx[0] != 0 or np.any(np.diff(idx) <= 0) or idx[-1] > rp.n_steps:
        raise ValueError("indices must start at 0 and increase strictly")
    pre = rp.prefix()
    v = rp.base.values - rp.base.values[0]
    a, b = idx[:-1], idx[1:]
    steps = pre[b] - pre[a] - v[a][:, :, None] * (v[b] - v[a])[:, None, :]
    base = SamplePath(rp.times[idx], rp.base.values[idx])
    return Level2RoughPath(base, steps, rp.flavor)


def insert_times(rp: Level2RoughPath, new_times) -> Level2RoughPath:
    """Refine the grid so it contains ``new_times``.

    Base values at new points come from linear interpolation. A split step keeps
    Chen's relation: each piece gets the linear-segment second level plus its
    time-proportional share of the step's deviation from ``1/2 dX (x) dX``.
    """
    t = rp.times
    new_times = np.unique(np.asarray(new_times, dtype=np.float64))
    if new_times.size and (new_times[0] < t[0] or new_times[-1] > t[-1]):
        raise ValueError("inserted times must lie inside the grid horizon")
    new_times = new_times[~np.isin(new_times, t)]
    if new_times.size == 0:
        return rp
    v = rp.base.values
    dx = rp.base.steps()
    lin = 0.5 * dx[:, :, None] * dx[:, None, :]
    resid = rp.second_steps - lin
    k_of = np.searchsorted(t, new_times, side="right") - 1

    times_out, vals_out, steps_out = [t[0]], [v[0]], []
    for k in range(rp.n_steps):
        cuts = new_times[k_of == k]
        if cuts.size == 0:
            times_out.append(t[k + 1])
            vals_out.append(v[k + 1])
            steps_out.append(rp.second_steps[k])
            continue
        h = t[k + 1] - t[k]
        fr = np.concatenate([[0.0], (cuts - t[k]) / h, [1.0]])
        for a, b in zip(fr[:-1], fr[1:]):
            w = b - a
            steps_out.append(w * w * lin[k] + w * resid[k])
        for c, f in zip(cuts, fr[1:-1]):
            times_out.append(c)
            vals_out.append(v[k] + f * dx[k])
        times_out.append(t[k + 1])
        vals_out.append(v[k + 1])
    base = SamplePath(np.array(times_out), np.array(vals_out))
    return Level2RoughPath(base, np.array(steps_out), rp.flavor)


def augment_time(rp: Level2RoughPath) -> Level2RoughPath:
    """Space-time lift ``(t, X_t)`` in R^{1+d}; time cross terms are the linear-segment integrals."""
    t = rp.times
    dt = np.diff(t)
    dx = rp.base.steps()
    d = rp.d
    steps = np.zeros((rp.n_steps, d + 1, d + 1))
    steps[:, 0, 0] = 0.5 * dt * dt
    steps[:, 0, 1:] = 0.5 * dt[:, None] * dx
    steps[:, 1:, 0] = 0.5 * dx * dt[:, None]
    steps[:, 1:, 1:] = rp.second_steps
    base = SamplePath(t, np.column_stack([t, rp.base.values]))
    return Level2RoughPath(base, steps, rp.flavor)


@dataclass(frozen=True, eq=False)
class ControlledPath:
    """``Y`` with Gubinelli derivative ``Y'`` (shape (n+1, e, d)) relative to ``reference``."""

    value: SamplePath
    derivative: np.ndarray
    reference: Level2RoughPath

    def __post_init__(self):
        der = np.array(self.derivative, dtype=np.float64)
        n1, e, d = self.value.times.size, self.value.d, self.reference.d
        if der.shape == (n1, e) and d == 1:
            der = der[:, :, None]
        if der.shape != (n1, e, d):
            raise ValueError(f"derivative shape {der.shape}, expected {(n1, e, d)}")
        if not same_grid(self.value, self.reference.base):
            raise ValueError("controlled path and reference must share a grid")
        der.setflags(write=False)
        object.__setattr__(self, "derivative", der)


def controlled_remainder(cp: ControlledPath, iv) -> np.ndarray:
    """``R_{s,t} = Y_{s,t} - Y'_s X_{s,t}``."""
    lo, hi = cp.value.check_interval(iv)
    return (increment(cp.value, (lo, hi))
            - cp.derivative[lo] @ increment(cp.reference.base, (lo, hi)))


__all__ = [
    "Flavor", "Level2RoughPath", "lift_piecewise_linear", "eval_second", "second_table",
    "check_chen", "ChenReport", "to_ito", "restrict", "insert_times", "augment_time",
    "ControlledPath", "controlled_remainder", "IntervalIdx",
]
