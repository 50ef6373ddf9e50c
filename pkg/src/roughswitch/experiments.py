"""Monte Carlo Wong-Zakai experiments, rate transfer, tail studies and run records."""

from __future__ import annotations

import dataclasses
import datetime as _dt
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._version import __version__
from .fields import builtin_family
from .gaussian import GaussianSpec, RngSeed, interpolate_on_grid, sample_batch
from .greedy import DegenerateTail, TailFit, fit_tail, n_alpha, survival
from .lift import lift_piecewise_linear, restrict
from .paths import SamplePath
from .switching import (JumpTrajectory, check_generator, davie_batch, simulate_ctmc)
from .variation import pvar_control, rho_pvar_metric, rough_distance_homog

SCHEMA_VERSION = 1
FIT_NOISE_BAND = 0.15
CSV_COLUMNS = ("trial", "lambda", "rho_metric", "sup_error", "n_alpha_X", "n_alpha_Xl",
               "n_jumps")


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _sha(obj) -> str:
    return hashlib.sha256(_canonical(obj).encode()).hexdigest()


# Rate fits --------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    """Log-log fit of the per-lambda median error; ``slope`` is the decay rate (positive)."""

    lambdas: list
    median: list
    q90: list
    slope: float
    intercept: float
    r2: float
    target: float | None = None

    @classmethod
    def from_samples(cls, lambdas, samples, target=None) -> "RateFit":
        lambdas = [int(x) for x in lambdas]
        med = [float(np.median(s)) for s in samples]
        q90 = [float(np.quantile(s, 0.9)) for s in samples]
        slope, icpt, r2 = _loglog(lambdas, med)
        return cls(lambdas, med, q90, slope, icpt, r2, target)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _loglog(lambdas, values):
    v = np.asarray(values, dtype=np.float64)
    if len(v) < 2 or np.any(v <= 0) or not np.all(np.isfinite(v)):
        return float("nan"), float("nan"), float("nan")
    x, y = np.log(np.asarray(lambdas, dtype=np.float64)), np.log(v)
    b, a = np.polyfit(x, y, 1)
    resid = y - (a + b * x)
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss if ss > 0 else 1.0
    return float(-b), float(a), r2


# Configuration ---------------------------------------------------------------------


@dataclass
class ConvergenceConfig:
    driver: dict = field(default_factory=lambda: {"kind": "bm", "d": 1, "T": 1.0})
    lambdas: list = field(default_factory=lambda: [8, 16, 32, 64, 128, 256, 512])
    trials: int = 500
    fields: str = "gbm"
    field_params: dict = field(default_factory=dict)
    y0: list = field(default_factory=lambda: [1.0])
    jumps: dict = field(default_factory=lambda: {"kind": "none"})
    p: float = 2.5
    alpha: float = 1.0
    epsilon: float = 0.1
    r: float = 2.0
    seed: int = 0
    ref_ratio: int = 64
    metric_ratio: int = 8
    nalpha_steps: int = 512
    trial_chunk: int = 25
    slope_band: list | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"config schema {self.schema_version}, expected {SCHEMA_VERSION}")
        self.lambdas = [int(x) for x in self.lambdas]
        if len(self.lambdas) < 4 or any(b <= a for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ValueError("lambda ladder needs at least 4 strictly increasing rungs")
        if self.lambdas[0] < 1:
            raise ValueError("lambdas must be positive")
        if self.trials < 100:
            raise ValueError("need at least 100 trials")
        if self.ref_ratio < 2 or self.ref_ratio % 2:
            raise ValueError("ref_ratio must be an even integer >= 2")
        if self.driver.get("kind") not in ("bm", "fbm", "linear"):
            raise ValueError(f"unknown driver kind {self.driver.get('kind')!r}")
        if self.jumps.get("kind") not in ("none", "ctmc", "deterministic"):
            raise ValueError(f"unknown jump kind {self.jumps.get('kind')!r}")
        if self.jumps["kind"] == "ctmc":
            check_generator(self.jumps["Q"])
        if not (self.p > 2 and self.alpha > 0 and self.trial_chunk >= 1):
            raise ValueError("need p > 2, alpha > 0 and trial_chunk >= 1")

    @property
    def n_ref(self) -> int:
        return self.ref_ratio * self.lambdas[-1]

    @property
    def T(self) -> float:
        return float(self.driver.get("T", 1.0))

    @property
    def d(self) -> int:
        return int(self.driver.get("d", 1))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ConvergenceConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path) -> "ConvergenceConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def hash(self) -> str:
        return _sha(self.to_dict())

    def family(self):
        return builtin_family(self.fields, **self.field_params)


def _driver_values(cfg: ConvergenceConfig, trial: int) -> np.ndarray:
    n, kind = cfg.n_ref, cfg.driver["kind"]
    if kind == "linear":
        return np.repeat(np.linspace(0.0, cfg.T, n + 1)[:, None], cfg.d, axis=1)
    spec = GaussianSpec(kind=kind, d=cfg.d, T=cfg.T, hurst=cfg.driver.get("hurst", 0.5))
    return sample_batch(spec, n, 1, RngSeed(cfg.seed, 2 * trial))[0]


def _jumps(cfg: ConvergenceConfig, trial: int) -> JumpTrajectory:
    j = cfg.jumps
    if j["kind"] == "none":
        return JumpTrajectory.constant(int(j.get("state", 0)), cfg.T)
    if j["kind"] == "deterministic":
        return JumpTrajectory(j["jump_times"], j["states"], cfg.T)
    return simulate_ctmc(j["Q"], int(j.get("initial", 0)), cfg.T, RngSeed(cfg.seed, 2 * trial + 1))


# Wong-Zakai experiment -------------------------------------------------------------


def _refine(times, jump_times):
    """Refined grid, the coarse step behind each refined step and its length fraction."""
    if len(jump_times) == 0:
        k = np.arange(len(times) - 1)
        return times, k, np.ones(k.size)
    t = np.union1d(times, jump_times)
    k = np.searchsorted(times, t[:-1], side="right") - 1
    w = np.diff(t) / np.diff(times)[k]
    return t, k, w


def _trial_measures(cfg, x, lam_vals):
    """Driver metric and greedy counts for one trial (independent of the solver)."""
    n = cfg.n_ref
    times = np.linspace(0.0, cfg.T, n + 1)
    rpX = lift_piecewise_linear(SamplePath(times, x))
    na = min(cfg.nalpha_steps, n)
    nX = n_alpha(pvar_control(restrict(rpX, np.arange(0, n + 1, n // na)), cfg.p), cfg.alpha)
    out = []
    for lam, v in zip(cfg.lambdas, lam_vals):
        m = min(lam * cfg.metric_ratio, n)
        idx = np.arange(0, n + 1, n // m)
        Xm = restrict(rpX, idx)
        Lm = lift_piecewise_linear(SamplePath(times[idx], v[idx]))
        rho = rho_pvar_metric(Xm, Lm, cfg.p)
        ma = min(m, na)
        ia = np.arange(0, n + 1, n // ma)
        nXl = n_alpha(pvar_control(lift_piecewise_linear(SamplePath(times[ia], v[ia])), cfg.p),
                      cfg.alpha)
        out.append((rho, nXl))
    return nX, out


def _run_chunk(cfg_dict: dict, trials: list) -> list:
    """Solve every member of every trial in one batch; one result dict per trial."""
    cfg = ConvergenceConfig.from_dict(cfg_dict)
    fam = cfg.family()
    n = cfg.n_ref
    times = np.linspace(0.0, cfg.T, n + 1)
    M = len(cfg.lambdas) + 2              # reference, approximants, half-resolution reference
    per = []
    for i in trials:
        x = _driver_values(cfg, i)
        J = _jumps(cfg, i)
        lam_vals = [interpolate_on_grid(x, lam) for lam in cfg.lambdas]
        vals = np.stack([x, *lam_vals, interpolate_on_grid(x, n // 2)])
        t_ref, k, w = _refine(times, J.jump_times)
        dx = np.diff(vals, axis=1)[:, k, :] * w[None, :, None]          # (M, L, d)
        per.append((i, x, J, lam_vals, t_ref, dx, J.state_at(t_ref[:-1])))
    L = max(p[5].shape[1] for p in per)
    B = len(per) * M
    dx_all = np.zeros((L, B, cfg.d))
    reg_all = np.empty((L, B), dtype=np.int64)
    for b, (_, _, J, _, _, dx, reg) in enumerate(per):
        sl = slice(b * M, (b + 1) * M)
        dx_all[:dx.shape[1], sl] = dx.transpose(1, 0, 2)
        reg_all[:, sl] = np.concatenate([reg, np.full(L - reg.size, reg[-1])])[:, None]
    Y, last = davie_batch(fam.fields, dx_all, np.asarray(cfg.y0, dtype=np.float64), reg_all)

    results = []
    for b, (i, x, J, lam_vals, t_ref, dx, _) in enumerate(per):
        nsteps = dx.shape[1]
        sl = slice(b * M, (b + 1) * M)
        if np.any(last[sl] < nsteps):
            results.append({"trial": i, "excluded": True})
            continue
        Yb = Y[:nsteps + 1, sl, :]
        err = np.linalg.norm(Yb[:, 1:, :] - Yb[:, :1, :], axis=2).max(axis=0)
        nX, meas = _trial_measures(cfg, x, lam_vals)
        results.append({
            "trial": i, "excluded": False, "n_jumps": J.n_jumps, "n_alpha_X": int(nX),
            "sup_error": [float(e) for e in err[:-1]], "ref_bias": float(err[-1]),
            "rho": [float(r) for r, _ in meas], "n_alpha_Xl": [int(c) for _, c in meas],
        })
    return results


@dataclass
class ConvergenceReport:
    config: dict
    solution: RateFit
    driver: RateFit
    ref_bias: float                 # median sup|Y(n_ref) - Y(n_ref/2)| over trials
    bias_ratio: float               # ref_bias / smallest median solution error
    excluded: list
    checks: dict
    exceedance: dict
    n_alpha_tail: dict | None
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v for v in self.checks.values() if v is not None)

    def summary(self) -> dict:
        d = {k: v for k, v in dataclasses.asdict(self).items() if k != "raw"}
        d["passed"] = self.passed
        return d


def _raw_section(results, lambdas) -> dict:
    rows, bias, excluded = [], [], []
    for res in results:
        if res["excluded"]:
            excluded.append(res["trial"])
            continue
        bias.append(res["ref_bias"])
        for j, lam in enumerate(lambdas):
            rows.append([res["trial"], lam, res["rho"][j], res["sup_error"][j],
                         res["n_alpha_X"], res["n_alpha_Xl"][j], res["n_jumps"]])
    return {"columns": list(CSV_COLUMNS), "rows": rows, "ref_bias": bias, "excluded": excluded}


def _chunks(cfg):
    ids = list(range(cfg.trials))
    return [ids[a:a + cfg.trial_chunk] for a in range(0, len(ids), cfg.trial_chunk)]


def run_wong_zakai(cfg: ConvergenceConfig, workers: int = 1) -> ConvergenceReport:
    """Per trial: solve with the fine lift and every approximant, measure errors and metrics.

    Aggregation folds results in trial order, so the output does not depend on
    ``workers``.
    """
    cfg_dict = cfg.to_dict()
    chunks = _chunks(cfg)
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [cfg_dict] * len(chunks), chunks))
    else:
        parts = [_run_chunk(cfg_dict, c) for c in chunks]
    results = sorted((r for part in parts for r in part), key=lambda r: r["trial"])
    raw = _raw_section(results, cfg.lambdas)
    return summarize(cfg, raw)


def summarize(cfg: ConvergenceConfig, raw: dict) -> ConvergenceReport:
    rows = np.array(raw["rows"], dtype=np.float64).reshape(-1, len(CSV_COLUMNS))
    lam_col = rows[:, 1]
    if rows.shape[0] == 0:
        raise RuntimeError("every trial blew up")
    sol = [rows[lam_col == lam, 3] for lam in cfg.lambdas]
    rho = [rows[lam_col == lam, 2] for lam in cfg.lambdas]
    target = 0.5 if cfg.driver["kind"] == "bm" else cfg.driver.get("hurst")
    sol_fit = RateFit.from_samples(cfg.lambdas, sol, target)
    rho_fit = RateFit.from_samples(cfg.lambdas, rho)
    bias = float(np.median(raw["ref_bias"]))
    low = min(sol_fit.median)
    ratio = bias / low if low > 0 else (0.0 if bias == 0 else math.inf)

    checks = {}
    if math.isfinite(sol_fit.slope) and math.isfinite(rho_fit.slope):
        checks["rate_coupling"] = sol_fit.slope >= rho_fit.slope - cfg.epsilon - FIT_NOISE_BAND
    else:
        checks["rate_coupling"] = None
    if cfg.slope_band is not None:
        lo, hi = cfg.slope_band
        checks["slope_band"] = (bool(lo <= sol_fit.slope <= hi)
                                if math.isfinite(sol_fit.slope) else False)

    # exceedance of beta * delta(lambda) * lambda^eps with delta the median driver metric
    exceed = {}
    base = [d * lam ** cfg.epsilon for d, lam in zip(rho_fit.median, cfg.lambdas)]
    if all(b > 0 for b in base):
        beta = sol_fit.median[0] / base[0]
        exceed = {"beta": beta, "lambdas": cfg.lambdas,
                  "frequency": [float(np.mean(s >= beta * b)) for s, b in zip(sol, base)],
                  "reference": [float((lam / cfg.lambdas[0]) ** -cfg.r) for lam in cfg.lambdas]}

    n_alpha_tail = None
    nx = rows[lam_col == cfg.lambdas[0], 4]
    try:
        n_alpha_tail = fit_tail(nx, 1.0, min_samples=min(1000, nx.size)).to_dict()
    except (DegenerateTail, ValueError) as exc:
        n_alpha_tail = {"degenerate": str(exc)}
    return ConvergenceReport(cfg.to_dict(), sol_fit, rho_fit, bias, ratio, raw["excluded"],
                             checks, exceed, n_alpha_tail, raw)


def write_csv(report: ConvergenceReport, path) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for row in report.raw["rows"]:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# Rate transfer ----------------------------------------------------------------------


@dataclass(frozen=True)
class RateTransfer:
    lambdas: list
    q: float
    moments: list            # empirical L^q norms per lambda
    eta_hat: float
    gamma: float
    r: float
    k: float
    frequency: list          # P(d >= k lambda^-gamma) per lambda
    reference: list          # frequency[0] * (lambda / lambda_0)^-r
    implied: bool            # gamma < eta_hat
    decay_ok: bool           # last-rung frequency below the reference line
    verdict: str

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def markov_rate_transfer(samples: dict, gamma: float, *, q: float = 2.0, r: float = 2.0,
                         k: float | None = None, eta: float | None = None) -> RateTransfer:
    """Decay of ``||d_lambda||_{L^q}`` and the exceedance frequencies it implies.

    ``samples`` maps lambda to distances ``d(X, X^lambda)``. ``eta`` overrides
    the fitted moment exponent. ``k`` defaults to the value putting the first
    rung's threshold at its median.
    """
    lambdas = sorted(int(x) for x in samples)
    if len(lambdas) < 2:
        raise ValueError("need at least two lambdas")
    data = [np.asarray(samples[lam], dtype=np.float64) for lam in lambdas]
    moments = [float(np.mean(np.abs(s) ** q) ** (1.0 / q)) for s in data]
    eta_hat, _, _ = _loglog(lambdas, moments)
    if all(m == 0 for m in moments[1:]):
        eta_hat = math.inf
    if not eta_hat > 0:
        raise ValueError(f"moments do not decay in lambda (fitted exponent {eta_hat})")
    eta_used = eta_hat if eta is None else float(eta)
    if k is None:
        k = float(np.median(data[0])) * lambdas[0] ** gamma
    freq = [float(np.mean(s >= k * lam ** -gamma)) for s, lam in zip(data, lambdas)]
    ref = [freq[0] * (lam / lambdas[0]) ** -r for lam in lambdas]
    implied = gamma < eta_used
    decay_ok = freq[-1] <= ref[-1]
    verdict = "implied" if implied and decay_ok else "not implied"
    return RateTransfer(lambdas, float(q), moments, float(eta_hat), float(gamma), float(r),
                        float(k), freq, ref, implied, decay_ok, verdict)


def interpolation_distances(spec: GaussianSpec, lambdas, trials: int, seed: int, *,
                            distance: str = "sup", p: float = 2.5, ref_ratio: int = 8,
                            metric_ratio: int = 8) -> dict:
    """Samples of ``d(X, X^lambda)`` for linear interpolation of Gaussian paths.

    ``distance`` is ``"sup"`` (uniform distance on the fine grid) or ``"rho"``
    (inhomogeneous p-variation metric on a grid of ``metric_ratio`` cells per
    interpolation step).
    """
    lambdas = sorted(int(x) for x in lambdas)
    n = ref_ratio * lambdas[-1]
    out = {lam: np.empty(trials) for lam in lambdas}
    times = np.linspace(0.0, spec.T, n + 1)
    for i in range(trials):
        x = sample_batch(spec, n, 1, RngSeed(seed, i))[0]
        rpX = lift_piecewise_linear(SamplePath(times, x)) if distance == "rho" else None
        for lam in lambdas:
            v = interpolate_on_grid(x, lam)
            if distance == "sup":
                out[lam][i] = np.linalg.norm(x - v, axis=1).max()
            elif distance == "rho":
                idx = np.arange(0, n + 1, n // min(lam * metric_ratio, n))
                out[lam][i] = rho_pvar_metric(restrict(rpX, idx), lift_piecewise_linear(
                    SamplePath(times[idx], v[idx])), p)
            else:
                raise ValueError(f"unknown distance {distance!r}")
    return out


# Tail experiment --------------------------------------------------------------------


@dataclass
class TailConfig:
    driver: dict = field(default_factory=lambda: {"kind": "bm", "d": 1, "T": 1.0})
    mesh: int = 512
    trials: int = 10_000
    alpha: float = 1.0
    p: float = 2.5
    q: float = 1.0
    lambdas: list = field(default_factory=lambda: [8, 16, 32])
    seed: int = 0
    min_exceed: int = 30

    def __post_init__(self):
        if self.trials < 10_000:
            raise ValueError("tail experiments need at least 10^4 trials")
        self.lambdas = [int(x) for x in self.lambdas]
        if any(self.mesh % lam for lam in self.lambdas):
            raise ValueError("every lambda must divide the mesh")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class TailReport:
    fit: TailFit | None
    fit_lambda: dict                # lambda -> TailFit or None when degenerate
    overshoot: dict                 # lambda -> max excess of the lambda tail over the fitted envelope
    dominated: bool
    positive_frequency: dict        # lambda -> P(N_alpha(distance control) > 0)
    positive_decreasing: bool
    samples: np.ndarray = field(repr=False, default=None)
    degenerate: str | None = None

    def to_dict(self) -> dict:
        return {
            "fit": None if self.fit is None else self.fit.to_dict(),
            "fit_lambda": {str(k): (v.to_dict() if v is not None else None)
                           for k, v in self.fit_lambda.items()},
            "overshoot": {str(k): v for k, v in self.overshoot.items()},
            "dominated": self.dominated,
            "positive_frequency": {str(k): v for k, v in self.positive_frequency.items()},
            "positive_decreasing": self.positive_decreasing,
            "degenerate": self.degenerate,
        }


def _fit_or_none(samples, q, min_exceed):
    try:
        return fit_tail(samples, q, min_exceed=min_exceed), None
    except DegenerateTail as exc:
        return None, str(exc)


def tail_experiment(cfg: TailConfig) -> TailReport:
    """Sample ``N_alpha`` for fine lifts and their interpolations and fit Gaussian-type tails."""
    spec = GaussianSpec(kind=cfg.driver.get("kind", "bm"), d=int(cfg.driver.get("d", 1)),
                        T=float(cfg.driver.get("T", 1.0)), hurst=cfg.driver.get("hurst", 0.5))
    n = cfg.mesh
    times = np.linspace(0.0, spec.T, n + 1)
    nB = np.empty(cfg.trials, dtype=np.int64)
    nL = {lam: np.empty(cfg.trials, dtype=np.int64) for lam in cfg.lambdas}
    pos = {lam: 0 for lam in cfg.lambdas}
    for i in range(cfg.trials):
        x = sample_batch(spec, n, 1, RngSeed(cfg.seed, i))[0]
        rpB = lift_piecewise_linear(SamplePath(times, x))
        nB[i] = n_alpha(pvar_control(rpB, cfg.p), cfg.alpha)
        for lam in cfg.lambdas:
            step = n // lam
            coarse = lift_piecewise_linear(SamplePath(times[::step], x[::step]))
            nL[lam][i] = n_alpha(pvar_control(coarse, cfg.p), cfg.alpha)
            on_grid = lift_piecewise_linear(SamplePath(times, interpolate_on_grid(x, lam)))
            # N_alpha of a control is positive iff the control reaches alpha over the whole interval
            pos[lam] += rough_distance_homog(rpB, on_grid, cfg.p) >= cfg.alpha

    fit, why = _fit_or_none(nB, cfg.q, cfg.min_exceed)
    fit_l = {lam: _fit_or_none(nL[lam], cfg.q, cfg.min_exceed)[0] for lam in cfg.lambdas}
    overshoot = {}
    for lam in cfg.lambdas:
        u, surv, _ = survival(nL[lam])
        if fit is None:
            env = np.where(u < max(int(nB.max()), 0) + 1, 1.0, 0.0)
        else:
            env = np.minimum(np.exp(fit.intercept + fit.slope * u.astype(float) ** (2 / cfg.q)), 1)
        overshoot[lam] = float(max(0.0, (surv - env).max()))
    noise = 3.0 / math.sqrt(cfg.trials)
    over = [overshoot[lam] for lam in cfg.lambdas]
    dominated = all(b <= a + noise for a, b in zip(over, over[1:]))
    freq = {lam: pos[lam] / cfg.trials for lam in cfg.lambdas}
    fr = [freq[lam] for lam in cfg.lambdas]
    decreasing = all(b <= a + noise for a, b in zip(fr, fr[1:]))
    return TailReport(fit, fit_l, overshoot, dominated, freq, decreasing, nB, why)


# Records ----------------------------------------------------------------------------


class RecordError(ValueError):
    pass


@dataclass
class ExperimentRecord:
    config: dict
    config_hash: str
    seed: int
    started: str
    finished: str
    raw: dict
    summary: dict
    kind: str = "wong_zakai"
    code_version: str = f"roughswitch {__version__}"
    schema_version: int = SCHEMA_VERSION
    raw_hash: str = ""

    def __post_init__(self):
        if not self.raw_hash:
            self.raw_hash = _sha(self.raw)

    def raw_bytes(self) -> bytes:
        return _canonical(self.raw).encode()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def record_wong_zakai(cfg: ConvergenceConfig, workers: int = 1):
    """Run the experiment and wrap it in an :class:`ExperimentRecord`."""
    start = _now()
    report = run_wong_zakai(cfg, workers)
    rec = ExperimentRecord(cfg.to_dict(), cfg.hash(), cfg.seed, start, _now(), report.raw,
                           _jsonable(report.summary()))
    return rec, report


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def persist(record: ExperimentRecord, path) -> None:
    """Write JSON; floats use shortest round-trip repr, so raw arrays reload bit-exactly."""
    Path(path).write_text(json.dumps(dataclasses.asdict(record), indent=1))


def load(path) -> ExperimentRecord:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise RecordError(f"schema version {doc.get('schema_version')} != {SCHEMA_VERSION}")
    if _sha(doc["config"]) != doc["config_hash"]:
        raise RecordError("config hash mismatch")
    if _sha(doc["raw"]) != doc["raw_hash"]:
        raise RecordError("raw measurement hash mismatch")
    return ExperimentRecord(**doc)
