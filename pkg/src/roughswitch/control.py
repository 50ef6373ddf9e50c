"""Two-parameter controls evaluated on grid indices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class ControlFn:
    """A superadditive ``omega(i, j)`` on a time grid.

    ``scan(i, hi)`` returns ``omega(i, j)`` for ``j = i, ..., hi``. Controls
    built from p-variation compute a whole scan for the price of one DP, so
    greedy partitioning goes through ``scan`` rather than pointwise calls.
    """

    grid: np.ndarray
    scan_fn: Callable[[int, int], np.ndarray]
    eval_fn: Optional[Callable[[int, int], float]] = None

    @property
    def n_steps(self) -> int:
        return len(self.grid) - 1

    def scan(self, i: int, hi: int) -> np.ndarray:
        if not 0 <= i <= hi <= self.n_steps:
            raise IndexError(f"scan ({i}, {hi}) outside grid")
        return np.asarray(self.scan_fn(i, hi), dtype=np.float64)

    def __call__(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        if self.eval_fn is not None:
            return float(self.eval_fn(i, j))
        return float(self.scan(i, j)[-1])

    def __add__(self, other: "ControlFn") -> "ControlFn":
        if len(self.grid) != len(other.grid):
            raise ValueError("controls live on different grids")
        return ControlFn(self.grid, lambda i, hi: self.scan(i, hi) + other.scan(i, hi),
                         lambda i, j: self(i, j) + other(i, j))

    def scale(self, c: float) -> "ControlFn":
        return ControlFn(self.grid, lambda i, hi: c * self.scan(i, hi),
                         lambda i, j: c * self(i, j))

    @classmethod
    def from_function(cls, grid, fn: Callable[[int, int], float]) -> "ControlFn":
        """Wrap a pointwise ``fn(i, j)``; scans evaluate it one index at a time."""
        def scan(i, hi):
            return np.array([0.0] + [fn(i, j) for j in range(i + 1, hi + 1)])
        return cls(np.asarray(grid, dtype=np.float64), scan, fn)

    @classmethod
    def from_matrix(cls, grid, table) -> "ControlFn":
        """Control given by a dense upper-triangular table ``table[i, j]``."""
        table = np.asarray(table, dtype=np.float64)
        return cls(np.asarray(grid, dtype=np.float64), lambda i, hi: table[i, i:hi + 1].copy(),
                   lambda i, j: table[i, j])
