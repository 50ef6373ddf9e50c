"""Vector fields ``V: R^e -> L(R^d, R^e)`` with analytic derivatives.

All evaluations broadcast over leading batch axes: ``V(y)`` maps (..., e) to
(..., e, d) and ``DV(y)`` maps (..., e) to (..., e, d, e) with
``DV[..., a, i, b] = dV[a, i] / dy_b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class VectorField:
    e: int
    d: int

    def V(self, y):
        raise NotImplementedError

    def DV(self, y):
        raise NotImplementedError


class ConstantField(VectorField):
    def __init__(self, c):
        self.c = np.atleast_2d(np.asarray(c, dtype=np.float64))
        self.e, self.d = self.c.shape

    def V(self, y):
        y = np.asarray(y)
        return np.broadcast_to(self.c, y.shape[:-1] + self.c.shape)

    def DV(self, y):
        y = np.asarray(y)
        return np.zeros(y.shape[:-1] + (self.e, self.d, self.e))

    def __repr__(self):
        return f"ConstantField({self.c.tolist()})"


class LinearField(VectorField):
    """``V(y)[:, i] = A_i y`` for matrices ``A_i`` of shape (e, e)."""

    def __init__(self, mats):
        self.A = np.asarray(mats, dtype=np.float64)
        if self.A.ndim == 2:
            self.A = self.A[None]
        self.d, self.e, _ = self.A.shape
        self._dv = np.ascontiguousarray(self.A.transpose(1, 0, 2))   # (e, d, e)

    def V(self, y):
        return np.einsum("iab,...b->...ai", self.A, y)

    def DV(self, y):
        y = np.asarray(y)
        return np.broadcast_to(self._dv, y.shape[:-1] + self._dv.shape)

    def __repr__(self):
        return f"LinearField({self.A.tolist()})"


class SinusoidField(VectorField):
    """``V(y)[a, i] = offset[a, i] + amp[a, i] * sin(W[a, i] . y + phase[a, i])``.

    Every derivative is globally bounded, so the Lip^gamma norm is finite for all gamma.
    """

    def __init__(self, amp, weights, phase=None, offset=None):
        self.amp = np.atleast_2d(np.asarray(amp, dtype=np.float64))
        self.e, self.d = self.amp.shape
        self.W = np.asarray(weights, dtype=np.float64).reshape(self.e, self.d, self.e)
        self.phase = np.zeros_like(self.amp) if phase is None else np.asarray(
            phase, dtype=np.float64).reshape(self.e, self.d)
        self.offset = np.zeros_like(self.amp) if offset is None else np.asarray(
            offset, dtype=np.float64).reshape(self.e, self.d)

    def _arg(self, y):
        return np.einsum("aib,...b->...ai", self.W, y) + self.phase

    def V(self, y):
        return self.offset + self.amp * np.sin(self._arg(y))

    def DV(self, y):
        return (self.amp * np.cos(self._arg(y)))[..., None] * self.W


class WithDrift(VectorField):
    """Drift folded in as the first driving column, for space-time drivers ``(t, X_t)``."""

    def __init__(self, drift: VectorField, diffusion: VectorField):
        if drift.d != 1 or drift.e != diffusion.e:
            raise ValueError("drift must be an e x 1 field on the same state space")
        self.drift, self.diffusion = drift, diffusion
        self.e, self.d = diffusion.e, diffusion.d + 1

    def V(self, y):
        return np.concatenate([self.drift.V(y), self.diffusion.V(y)], axis=-1)

    def DV(self, y):
        return np.concatenate([self.drift.DV(y), self.diffusion.DV(y)], axis=-2)


def lip_norm(vf: VectorField, box, gamma: float, n_samples: int = 2000, seed: int = 0) -> float:
    """Sampled proxy for ``|V|_{Lip^gamma}`` over an axis-aligned box.

    Takes the max of sup|V|, sup|DV| and the Hölder quotient of DV with
    exponent ``min(gamma - 1, 1)`` over random point pairs in the box.
    """
    box = np.asarray(box, dtype=np.float64).reshape(vf.e, 2)
    rng = np.random.default_rng(seed)
    lo, hi = box[:, 0], box[:, 1]
    x = lo + (hi - lo) * rng.random((n_samples, vf.e))
    y = lo + (hi - lo) * rng.random((n_samples, vf.e))
    sup_v = np.linalg.norm(vf.V(x).reshape(n_samples, -1), axis=1).max()
    dvx, dvy = vf.DV(x).reshape(n_samples, -1), vf.DV(y).reshape(n_samples, -1)
    sup_dv = np.linalg.norm(dvx, axis=1).max()
    h = min(gamma - 1.0, 1.0)
    dist = np.linalg.norm(x - y, axis=1)
    ok = dist > 1e-12
    hold = (np.linalg.norm(dvx - dvy, axis=1)[ok] / dist[ok] ** h).max() if ok.any() else 0.0
    return float(max(sup_v, sup_dv, hold))


@dataclass
class VectorFieldFamily:
    """Per-regime vector fields indexed by integer state ids."""

    fields: dict
    gamma: float = 3.5
    box: list = field(default_factory=lambda: [[-3.0, 3.0]])
    name: str = "custom"

    def __post_init__(self):
        if isinstance(self.fields, (list, tuple)):
            self.fields = dict(enumerate(self.fields))
        shapes = {(f.e, f.d) for f in self.fields.values()}
        if len(shapes) != 1:
            raise ValueError(f"fields disagree on (e, d): {shapes}")
        (self.e, self.d), = shapes

    def __getitem__(self, state):
        return self.fields[state]

    @property
    def states(self):
        return sorted(self.fields)

    def nu(self, n_samples: int = 2000, seed: int = 0) -> float:
        box = self.box if len(self.box) == self.e else [self.box[0]] * self.e
        return max(lip_norm(f, box, self.gamma, n_samples, seed) for f in self.fields.values())

    def check_regularity(self, p: float) -> None:
        if not self.gamma > p:
            raise ValueError(f"need gamma > p, got gamma={self.gamma}, p={p}")
        if not math.isfinite(self.nu()):
            raise ValueError("vector field norm is not finite on the box")


def builtin_family(name: str, **kw) -> VectorFieldFamily:
    """Shipped families.

    ``gbm``: V(y) = sigma y.  ``gbm2``: two regimes sigma_1 y, sigma_2 y.
    ``additive2``: V = 1 and V = 2.  ``smooth2``: bounded sinusoid fields.
    ``rotation2``: non-commuting linear pair on R^2 driven by 2D noise.
    """
    if name == "gbm":
        s = kw.get("sigma", 1.0)
        return VectorFieldFamily({0: LinearField([[[s]]])}, name=name)
    if name == "gbm2":
        s1, s2 = kw.get("sigmas", (0.5, 1.5))
        return VectorFieldFamily({0: LinearField([[[s1]]]), 1: LinearField([[[s2]]])},
                                 name=name)
    if name == "additive2":
        return VectorFieldFamily({0: ConstantField([[1.0]]), 1: ConstantField([[2.0]])},
                                 name=name)
    if name == "smooth2":
        return VectorFieldFamily({
            0: SinusoidField([[1.0]], [[[1.0]]], [[0.3]]),
            1: SinusoidField([[0.7]], [[[2.0]]], [[1.1]], [[0.5]]),
        }, name=name)
    if name == "rotation2":
        a = kw.get("a", 1.0)
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        diag = np.diag([1.0, -1.0])
        return VectorFieldFamily({
            0: LinearField(a * np.stack([rot, diag])),
            1: LinearField(a * np.stack([diag, rot])),
        }, box=[[-3.0, 3.0], [-3.0, 3.0]], name=name)
    raise KeyError(f"unknown builtin family {name!r}")


BUILTIN_FAMILIES = ("gbm", "gbm2", "additive2", "smooth2", "rotation2")
