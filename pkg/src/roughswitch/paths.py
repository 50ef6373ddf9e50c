"""Sampled paths on explicit (possibly non-uniform) time grids."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np


class IntervalIdx(NamedTuple):
    """Closed grid interval ``[times[lo], times[hi]]``."""

    lo: int
    hi: int


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SamplePath:
    """A path sampled at grid points ``times`` with values of shape (n+1, d).

    Between grid points the path is understood as the linear interpolant.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = _frozen(self.times)
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        values.setflags(write=False)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("times must be a non-empty vector")
        if times[0] != 0.0:
            raise ValueError(f"times[0] must be 0, got {times[0]!r}")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if values.ndim != 2 or values.shape[0] != times.size:
            raise ValueError(
                f"values shape {values.shape} does not match {times.size} grid points")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValueError("path contains non-finite entries")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def n_steps(self) -> int:
        return self.times.size - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def full(self) -> IntervalIdx:
        return IntervalIdx(0, self.n_steps)

    def steps(self) -> np.ndarray:
        """Per-step increments, shape (n, d)."""
        return np.diff(self.values, axis=0)

    def check_interval(self, iv) -> IntervalIdx:
        lo, hi = int(iv[0]), int(iv[1])
        if not 0 <= lo <= hi <= self.n_steps:
            raise IndexError(f"interval ({lo}, {hi}) outside grid 0..{self.n_steps}")
        return IntervalIdx(lo, hi)

    def at(self, t) -> np.ndarray:
        """Linear interpolant evaluated at time(s) ``t``; shape (..., d)."""
        t = np.asarray(t, dtype=np.float64)
        out = np.stack([np.interp(t, self.times, self.values[:, k]) for k in range(self.d)],
                       axis=-1)
        return out

    def restrict(self, indices) -> "SamplePath":
        """Sub-path on the grid points ``indices`` (must start at 0), time-shifted to 0."""
        idx = np.asarray(indices, dtype=np.intp)
        return SamplePath(self.times[idx] - self.times[idx[0]], self.values[idx])

    # serialization -----------------------------------------------------

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{k + 1}" for k in range(self.d)])
        for t, row in zip(self.times, self.values):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "SamplePath":
        """Read from a CSV file path or from CSV text."""
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            source = Path(source).read_text()
        rows = list(csv.reader(io.StringIO(source)))
        header, body = rows[0], [r for r in rows[1:] if r]
        if not header or header[0].strip() != "t":
            raise ValueError("CSV header must start with 't'")
        data = np.array([[float(x) for x in r] for r in body], dtype=np.float64)
        return cls(data[:, 0], data[:, 1:])


def increment(path: SamplePath, iv) -> np.ndarray:
    """``X_{s,t} = X_t - X_s`` for the grid interval ``iv``."""
    lo, hi = path.check_interval(iv)
    return path.values[hi] - path.values[lo]


def outer(a, b) -> np.ndarray:
    """Tensor product ``a (x) b`` as a d x d matrix."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return np.outer(a, b)


def same_grid(x: SamplePath, y: SamplePath) -> bool:
    return x.times.shape == y.times.shape and bool(np.all(x.times == y.times))


def sup_distance(x: SamplePath, y: SamplePath) -> float:
    """Maximum Euclidean distance between the two paths over their common grid."""
    if not same_grid(x, y) or x.d != y.d:
        raise ValueError("paths must share time grid and dimension")
    return float(np.max(np.linalg.norm(x.values - y.values, axis=1)))


def resample_linear(path: SamplePath, times) -> SamplePath:
    """Evaluate the linear interpolant of ``path`` on another grid."""
    times = np.asarray(times, dtype=np.float64)
    return SamplePath(times, path.at(times))
