"""Jump processes, the second-order RDE step and regime-switching solutions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fields import VectorField, VectorFieldFamily
from .gaussian import _as_rng
from .greedy import n_alpha
from .lift import ControlledPath, Level2RoughPath, insert_times
from .paths import SamplePath, same_grid, sup_distance
from .variation import pvar_control, rho_pvar_metric


# Jump trajectories -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JumpTrajectory:
    """Piecewise-constant state path on ``[0, T]``.

    ``states[k]`` is the regime on ``[jump_times[k-1], jump_times[k])`` with
    the conventions ``jump_times[-1] = 0`` and ``jump_times[n] = T``.
    """

    jump_times: np.ndarray
    states: tuple
    T: float

    def __post_init__(self):
        jt = np.array(self.jump_times, dtype=np.float64).reshape(-1)
        states = tuple(int(s) for s in self.states)
        if not self.T > 0:
            raise ValueError("horizon must be positive")
        if len(states) != jt.size + 1:
            raise ValueError("need exactly one more state than jump times")
        if jt.size and (jt[0] <= 0 or jt[-1] >= self.T or np.any(np.diff(jt) <= 0)):
            raise ValueError("jump times must be strictly increasing inside (0, T)")
        if any(a == b for a, b in zip(states, states[1:])):
            raise ValueError("consecutive states must differ")
        jt.setflags(write=False)
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "T", float(self.T))

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)

    @classmethod
    def constant(cls, state: int, T: float) -> "JumpTrajectory":
        return cls([], (state,), T)

    @classmethod
    def deterministic(cls, jump_times, states, T: float) -> "JumpTrajectory":
        """A fixed schedule, bypassing simulation."""
        return cls(jump_times, states, T)

    def segment_of(self, t) -> np.ndarray:
        """Index of the regime segment containing ``t`` (right-continuous)."""
        return np.searchsorted(self.jump_times, np.asarray(t, dtype=np.float64), side="right")

    def state_at(self, t):
        idx = self.segment_of(t)
        return np.asarray(self.states)[idx]

    def to_dict(self) -> dict:
        return {"jump_times": self.jump_times.tolist(), "states": list(self.states), "T": self.T}

    @classmethod
    def from_dict(cls, doc: dict) -> "JumpTrajectory":
        return cls(doc["jump_times"], doc["states"], doc["T"])

    @classmethod
    def from_json(cls, path) -> "JumpTrajectory":
        return cls.from_dict(json.loads(Path(path).read_text()))


def check_generator(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError("generator must be a square matrix")
    if not np.all(np.isfinite(Q)):
        raise ValueError("generator has non-finite entries")
    off = Q - np.diag(np.diag(Q))
    if np.any(off < 0):
        raise ValueError("generator off-diagonal entries must be non-negative")
    scale = max(1.0, float(np.abs(Q).max()))
    if np.any(np.abs(Q.sum(axis=1)) > 1e-12 * scale * Q.shape[0]):
        raise ValueError("generator rows must sum to zero")
    return Q


def simulate_ctmc(Q, initial: int, T: float, seed) -> JumpTrajectory:
    """Exponential holding times and jump-chain moves on ``[0, T]``."""
    Q = check_generator(Q)
    if not 0 <= initial < Q.shape[0]:
        raise ValueError(f"initial state {initial} outside 0..{Q.shape[0] - 1}")
    rng = _as_rng(seed)
    t, state = 0.0, int(initial)
    times, states = [], [state]
    while True:
        rate = -Q[state, state]
        if rate <= 0:
            break
        t += rng.exponential(1.0 / rate)
        if t >= T:
            break
        probs = Q[state].copy()
        probs[state] = 0.0
        state = int(rng.choice(Q.shape[0], p=probs / rate))
        times.append(t)
        states.append(state)
    return JumpTrajectory(times, states, T)


def symmetric_generator(rate: float, n_states: int = 2) -> np.ndarray:
    """Exit rate ``rate`` from every state, uniform over the others."""
    Q = np.full((n_states, n_states), rate / max(n_states - 1, 1))
    np.fill_diagonal(Q, -rate if n_states > 1 else 0.0)
    return Q


@dataclass(frozen=True)
class JumpTailReport:
    holds: bool
    largest_violation: int | None     # largest j with empirical tail above the envelope
    checked: list                     # thresholds with enough exceedances
    mean: float                       # tail-sum estimate of E[N]
    n_samples: int
    gamma0: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def jump_envelope(j, gamma0: float) -> np.ndarray:
    j = np.asarray(j, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        # j log j -> 0 as j -> 0
        return np.where(j > 0, np.exp(-j * (np.log(j) - gamma0)), 1.0)


def check_jump_tail(samples, gamma0: float, *, min_samples: int = 10_000,
                    min_exceed: int = 30) -> JumpTailReport:
    """Compare the empirical survival of jump counts to ``exp(-j (log j - gamma0))``.

    ``samples`` holds counts or :class:`JumpTrajectory` objects. The envelope
    is checked at integer ``j >= 1`` with at least ``min_exceed`` exceedances.
    """
    counts = np.array([s.n_jumps if isinstance(s, JumpTrajectory) else s for s in samples],
                      dtype=np.int64)
    if counts.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {counts.size}")
    if np.any(counts < 0):
        raise ValueError("jump counts must be non-negative")
    top = int(counts.max())
    j = np.arange(0, top + 1)
    exceed = np.bincount(counts, minlength=top + 1)[::-1].cumsum()[::-1] - np.bincount(
        counts, minlength=top + 1)
    surv = exceed / counts.size
    env = jump_envelope(j, gamma0)
    viol = (surv > env) & (j >= 1)
    checked = [int(k) for k in j[(exceed >= min_exceed) & (j >= 1)]]
    holds = not bool(np.any(viol[checked])) if checked else True
    largest = int(j[viol].max()) if viol.any() else None
    return JumpTailReport(holds, largest, checked, float(surv.sum()), int(counts.size),
                          float(gamma0))


# Second-order solver -----------------------------------------------------------------


class SolverBlowUp(FloatingPointError):
    def __init__(self, last_valid: int, msg: str = ""):
        super().__init__(msg or f"non-finite state after grid index {last_valid}")
        self.last_valid = last_valid


def _eval(fields: dict, regimes, y):
    """V and DV at ``y`` (B, e) with per-member regime ids ``regimes`` (B,) or a scalar."""
    if np.ndim(regimes) == 0:
        f = fields[int(regimes)]
        return f.V(y), f.DV(y)
    V = DV = None
    for s in np.unique(regimes):
        f = fields[int(s)]
        m = regimes == s
        vs, dvs = f.V(y), f.DV(y)
        if V is None:
            V, DV = np.array(vs), np.array(dvs)
        else:
            V = np.where(m[:, None, None], vs, V)
            DV = np.where(m[:, None, None, None], dvs, DV)
    return V, DV


def davie_batch(fields: dict, dx, y0, regimes=None, dxx=None) -> tuple[np.ndarray, np.ndarray]:
    """Second-order steps ``Y += V(Y) dX + (DV V)(Y) : XX`` for a batch of drivers.

    ``dx`` has shape (n, B, d); ``dxx`` (n, B, d, d) defaults to ``1/2 dx (x) dx``;
    ``regimes`` (n, B) picks the field per step and member (all state 0 when
    omitted). Returns ``Y`` of shape (n+1, B, e) and, per member, the last grid
    index with a finite state (``n`` when nothing blew up).
    """
    dx = np.asarray(dx, dtype=np.float64)
    n, B, d = dx.shape
    y = np.array(np.broadcast_to(y0, (B, np.shape(y0)[-1])), dtype=np.float64)
    e = y.shape[1]
    Y = np.empty((n + 1, B, e))
    Y[0] = y
    scalar = e == 1 and d == 1
    if regimes is None:
        regimes = np.full((n, 1), next(iter(fields)))
    regimes = np.asarray(regimes)
    uniform = (regimes == regimes[:, :1]).all(axis=1)
    with np.errstate(all="ignore"):
        for k in range(n):
            reg = regimes[k, 0] if uniform[k] else regimes[k]
            V, DV = _eval(fields, reg, y)
            xx = 0.5 * dx[k, :, :, None] * dx[k, :, None, :] if dxx is None else dxx[k]
            if scalar:
                v = V[:, 0, 0]
                y = y + (v * dx[k, :, 0] + DV[:, 0, 0, 0] * v * xx[:, 0, 0])[:, None]
            else:
                # (DV V)[a, i, j] = sum_c dV[a, j]/dy_c V[c, i], contracted with XX[i, j]
                DVV = np.einsum("bajc,bci->baij", DV, V)
                y = y + np.einsum("bai,bi->ba", V, dx[k]) + np.einsum("baij,bij->ba", DVV, xx)
            Y[k + 1] = y
    finite = np.isfinite(Y).all(axis=2)
    last = np.where(finite.all(axis=0), n, np.argmin(finite, axis=0) - 1)
    return Y, last


def solve_rde(V: VectorField, rp: Level2RoughPath, y0, iv=None) -> SamplePath:
    """One second-order step per grid interval of ``rp`` (restricted to ``iv``)."""
    lo, hi = rp.base.check_interval(rp.base.full() if iv is None else iv)
    y0 = np.atleast_1d(np.asarray(y0, dtype=np.float64))
    if y0.shape != (V.e,) or V.d != rp.d:
        raise ValueError(f"field maps R^{V.e} x R^{V.d}; got y0 {y0.shape}, driver d={rp.d}")
    dx = rp.base.steps()[lo:hi, None, :]
    dxx = rp.second_steps[lo:hi, None]
    Y, last = davie_batch({0: V}, dx, y0, dxx=dxx)
    if last[0] < hi - lo:
        raise SolverBlowUp(lo + int(last[0]))
    return SamplePath(rp.times[lo:hi + 1], Y[:, 0, :])


@dataclass(frozen=True, eq=False)
class SwitchingSolution:
    path: SamplePath
    segment_index: np.ndarray      # regime segment per grid index (jump points start a segment)
    rough_path: Level2RoughPath = field(repr=False, default=None)


def _refined(rp: Level2RoughPath, J: JumpTrajectory) -> Level2RoughPath:
    if not math.isclose(J.T, rp.times[-1], rel_tol=1e-12) or rp.times[0] != 0:
        raise ValueError(f"jump horizon {J.T} does not match driver horizon {rp.times[-1]}")
    return insert_times(rp, J.jump_times)


def step_regimes(times, J: JumpTrajectory) -> np.ndarray:
    """Regime of each grid step, read at the step's left endpoint."""
    return J.state_at(np.asarray(times)[:-1])


def solve_switching_rde(family: VectorFieldFamily, rp: Level2RoughPath, J: JumpTrajectory,
                        y0) -> SwitchingSolution:
    """Concatenate single-regime solutions across the jump times of ``J``.

    Jump times are inserted into the grid, so each regime restarts from the
    previous regime's value at a shared grid point.
    """
    missing = set(J.states) - set(family.fields)
    if missing:
        raise KeyError(f"no vector field for states {sorted(missing)}")
    rr = _refined(rp, J)
    y0 = np.atleast_1d(np.asarray(y0, dtype=np.float64))
    if y0.shape != (family.e,) or family.d != rr.d:
        raise ValueError("initial value or driver dimension does not match the fields")
    regimes = step_regimes(rr.times, J)[:, None]
    Y, last = davie_batch(family.fields, rr.base.steps()[:, None, :], y0, regimes,
                          rr.second_steps[:, None])
    if last[0] < rr.n_steps:
        raise SolverBlowUp(int(last[0]))
    seg = J.segment_of(rr.times)
    return SwitchingSolution(SamplePath(rr.times, Y[:, 0, :]), seg, rr)


# Regime-switching rough integral -----------------------------------------------------


def switching_rough_integral(integrands: dict, rp: Level2RoughPath,
                             J: JumpTrajectory) -> SamplePath:
    """Compensated Riemann sums ``sum Y_u X_{u,v} + Y'_u XX_{u,v}`` with regime at ``u``.

    Each integrand is a :class:`ControlledPath` on ``rp``'s grid whose value lives
    in R^(f*d) (a row-major f x d matrix). Jump times are added to the
    partition; integrands are linearly interpolated there. Returns the running
    integral on the refined grid.
    """
    missing = set(J.states) - set(integrands)
    if missing:
        raise KeyError(f"no integrand for states {sorted(missing)}")
    d = rp.d
    e = None
    for cp in integrands.values():
        if not isinstance(cp, ControlledPath):
            raise TypeError("integrands must be ControlledPath objects")
        if not same_grid(cp.value, rp.base) or cp.reference.d != d:
            raise ValueError("integrand grid does not match the driver grid")
        if e is None:
            e = cp.value.d
        elif cp.value.d != e:
            raise ValueError("integrands disagree on dimension")
    if e % d:
        raise ValueError(f"integrand dimension {e} is not a multiple of d={d}")
    f = e // d
    rr = _refined(rp, J)
    t = rr.times
    dx = rr.base.steps()
    regimes = step_regimes(t, J)
    out = np.zeros((t.size, f))
    for s in set(regimes.tolist()):
        cp = integrands[s]
        mask = regimes == s
        tl = t[:-1][mask]
        val = cp.value.at(tl).reshape(-1, f, d)
        der = np.stack([np.stack([np.interp(tl, rp.times, cp.derivative[:, a, j])
                                  for j in range(d)], axis=-1) for a in range(e)], axis=1)
        der = der.reshape(-1, f, d, d)
        # sum_{i,j} Y'[a, i, j] XX^{j, i}
        out[1:][mask] = (np.einsum("kai,ki->ka", val, dx[mask])
                         + np.einsum("kaij,kji->ka", der, rr.second_steps[mask]))
    np.cumsum(out, axis=0, out=out)
    return SamplePath(t, out)


# Pathwise Lipschitz bound ------------------------------------------------------------


def _rhs(C, n_jumps, rho, n_total):
    C = np.asarray(C, dtype=np.float64)
    if rho == 0:
        return np.zeros_like(C)
    with np.errstate(over="ignore"):
        return C ** 2 / (C - 1.0) * C ** n_jumps * rho * np.exp(C * n_total)


@dataclass(frozen=True)
class LipschitzBoundReport:
    lhs: float
    rho: float
    n_x: int
    n_xl: int
    n_jumps: int
    C: float
    rhs: float
    holds: bool
    fitted_c: float | None     # smallest candidate C with lhs <= rhs(C)
    c_tight: float             # candidate minimising rhs(C)
    tightness: float           # lhs / min_C rhs(C); <= 1 iff some C works

    def rhs_at(self, C: float) -> float:
        return float(_rhs(C, self.n_jumps, self.rho, self.n_x + self.n_xl))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def lipschitz_bound(family: VectorFieldFamily, rpX: Level2RoughPath, rpXl: Level2RoughPath,
                    J: JumpTrajectory, p: float, alpha: float, C: float, y0=None,
                    candidates=None) -> LipschitzBoundReport:
    """Evaluate ``|Y - Y^l|_inf <= C^2/(C-1) C^{N^J} rho exp(C (N(X) + N(Xl)))`` on one sample."""
    if not C > 1:
        raise ValueError("need C > 1")
    if not same_grid(rpX.base, rpXl.base):
        raise ValueError("rough paths must share a grid")
    y0 = np.zeros(family.e) if y0 is None else y0
    Y = solve_switching_rde(family, rpX, J, y0).path
    Yl = solve_switching_rde(family, rpXl, J, y0).path
    lhs = sup_distance(Y, Yl)
    rho = rho_pvar_metric(rpX, rpXl, p)
    nx = n_alpha(pvar_control(rpX, p), alpha)
    nxl = n_alpha(pvar_control(rpXl, p), alpha)
    if candidates is None:
        candidates = 1.0 + np.geomspace(1e-6, 1e3, 400)
    cand = np.sort(np.asarray(candidates, dtype=np.float64))
    cand = cand[cand >= 1.0 + 1e-6]
    rhs_c = _rhs(cand, J.n_jumps, rho, nx + nxl)
    ok = lhs <= rhs_c
    fitted = float(cand[np.argmax(ok)]) if ok.any() else None
    best = int(np.argmin(rhs_c))
    tight = lhs / rhs_c[best] if rhs_c[best] > 0 else (0.0 if lhs == 0 else math.inf)
    rhs = float(_rhs(C, J.n_jumps, rho, nx + nxl))
    return LipschitzBoundReport(lhs, rho, nx, nxl, J.n_jumps, float(C), rhs, lhs <= rhs,
                                fitted, float(cand[best]), float(tight))
