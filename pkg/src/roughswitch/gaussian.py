"""Brownian and fractional Brownian samplers, covariances and linear interpolation."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .paths import SamplePath
from .variation import CovGrid

FBM_MAX_STEPS = 4096


@dataclass(frozen=True)
class GaussianSpec:
    kind: str = "bm"           # "bm" or "fbm"
    d: int = 1
    T: float = 1.0
    hurst: float = 0.5

    def __post_init__(self):
        if self.kind not in ("bm", "fbm"):
            raise ValueError(f"unknown process kind {self.kind!r}")
        if self.d < 1 or not self.T > 0:
            raise ValueError("need d >= 1 and T > 0")
        if self.kind == "fbm" and not 0.25 < self.hurst <= 0.5:
            raise ValueError(f"fBm needs H in (1/4, 1/2], got {self.hurst}")
        if self.kind == "bm" and self.hurst != 0.5:
            object.__setattr__(self, "hurst", 0.5)

    @property
    def rho(self) -> float:
        """2D variation exponent of the covariance."""
        return 1.0 if self.kind == "bm" else 1.0 / (2.0 * self.hurst)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "d": self.d, "T": self.T, "hurst": self.hurst}


@dataclass(frozen=True)
class RngSeed:
    """(seed, stream) pair; each stream is an independent, order-free substream."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, RngSeed):
        return seed.generator()
    return RngSeed(int(seed)).generator()


def fbm_covariance(times, hurst: float) -> np.ndarray:
    s, t = np.meshgrid(times, times, indexing="ij")
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(t) ** h2 + np.abs(s) ** h2 - np.abs(t - s) ** h2)


@functools.lru_cache(maxsize=16)
def _fbm_factor(hurst: float, T: float, n: int) -> np.ndarray:
    times = np.linspace(0.0, T, n + 1)[1:]
    cov = fbm_covariance(times, hurst)
    try:
        L = scipy.linalg.cholesky(cov, lower=True)
    except np.linalg.LinAlgError as exc:
        lam = np.linalg.eigvalsh(cov).min()
        raise np.linalg.LinAlgError(
            f"fBm covariance not numerically PD on grid n={n}, T={T}, H={hurst}: "
            f"smallest eigenvalue {lam:.3e}") from exc
    L.setflags(write=False)
    return L


def sample_batch(spec: GaussianSpec, n: int, trials: int, seed) -> np.ndarray:
    """Independent paths on the uniform n-step grid, shape (trials, n+1, d)."""
    if n < 1:
        raise ValueError("need at least one step")
    rng = _as_rng(seed)
    out = np.zeros((trials, n + 1, spec.d))
    if spec.kind == "bm":
        z = rng.standard_normal((trials, n, spec.d))
        np.cumsum(z * np.sqrt(spec.T / n), axis=1, out=out[:, 1:])
    else:
        if n > FBM_MAX_STEPS:
            raise ValueError(f"fBm grids are capped at {FBM_MAX_STEPS} steps")
        L = _fbm_factor(float(spec.hurst), float(spec.T), int(n))
        z = rng.standard_normal((trials, n, spec.d))
        out[:, 1:] = np.einsum("ij,tjd->tid", L, z)
    return out


def sample(spec: GaussianSpec, n: int, seed) -> SamplePath:
    """One path on the uniform grid of ``n`` steps over ``[0, T]``."""
    values = sample_batch(spec, n, 1, seed)[0]
    return SamplePath(np.linspace(0.0, spec.T, n + 1), values)


def interpolate(path: SamplePath, lam: int) -> SamplePath:
    """Keep every (n/lam)-th grid point; the linear interpolant is the mesh-T/lam approximant."""
    n = path.n_steps
    if lam < 1 or n % lam:
        raise ValueError(f"lambda={lam} must divide the step count {n}")
    return SamplePath(path.times[:: n // lam], path.values[:: n // lam])


def interpolate_on_grid(values: np.ndarray, lam: int) -> np.ndarray:
    """Linear interpolant of every (n/lam)-th point, evaluated back on the uniform fine grid.

    ``values`` has shape (..., n+1, d); the result has the same shape.
    """
    n = values.shape[-2] - 1
    if n % lam:
        raise ValueError(f"lambda={lam} must divide the step count {n}")
    s = n // lam
    k = np.arange(n + 1)
    left = np.minimum(k // s, lam - 1) * s
    w = ((k - left) / s)[:, None]
    return (1.0 - w) * values[..., left, :] + w * values[..., left + s, :]


def cov_grid(spec: GaussianSpec, times) -> CovGrid:
    """Exact per-component covariance on a grid."""
    t = np.asarray(times, dtype=np.float64)
    if spec.kind == "bm":
        R = np.minimum.outer(t, t)
    else:
        R = fbm_covariance(t, spec.hurst)
    return CovGrid(t, R)


@dataclass(frozen=True)
class ApproxReport:
    lambdas: list
    sup_mse: list
    exponent: float          # decay exponent of sup_t E|X^h_t - X_t|^2 in the mesh h
    intercept: float

    def to_dict(self) -> dict:
        return {"lambdas": self.lambdas, "sup_mse": self.sup_mse,
                "exponent": self.exponent, "intercept": self.intercept}


def check_condition_approx(spec: GaussianSpec, lambdas, trials: int, seed, n: int | None = None,
                           chunk: int = 1000) -> ApproxReport:
    """Monte Carlo ``sup_t E|X^lambda_t - X_t|^2`` per lambda and its log-log decay in the mesh."""
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    lambdas = sorted(int(x) for x in lambdas)
    if n is None:
        n = 8 * lambdas[-1]
        if spec.kind == "fbm":
            n = min(n, FBM_MAX_STEPS)
    rng = _as_rng(seed)
    acc = {lam: np.zeros(n + 1) for lam in lambdas}
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        x = sample_batch(spec, n, m, rng)
        for lam in lambdas:
            err = ((interpolate_on_grid(x, lam) - x) ** 2).sum(axis=-1)
            acc[lam] += err.sum(axis=0)
        done += m
    sup_mse = [float((acc[lam] / trials).max()) for lam in lambdas]
    h = spec.T / np.array(lambdas, dtype=float)
    pos = np.array(sup_mse) > 0
    if pos.sum() >= 2:
        slope, icpt = np.polyfit(np.log(h[pos]), np.log(np.array(sup_mse)[pos]), 1)
    else:
        slope, icpt = float("nan"), float("nan")
    return ApproxReport(lambdas, sup_mse, float(slope), float(icpt))
