"""Command line entry point: ``roughswitch <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .fields import BUILTIN_FAMILIES, builtin_family
from .gaussian import GaussianSpec, sample
from .greedy import greedy_sequence
from .lift import Level2RoughPath, lift_piecewise_linear
from .paths import SamplePath
from .switching import (JumpTrajectory, simulate_ctmc, solve_switching_rde,
                        symmetric_generator)
from .variation import path_p_variation, second_p_variation


def _emit(doc, out=None):
    text = json.dumps(ex._jsonable(doc), indent=1)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _interval(text):
    if text is None:
        return None
    lo, hi = text.split(":")
    return int(lo), int(hi)


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _read_driver(path) -> Level2RoughPath:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return Level2RoughPath.from_json(text)
    return lift_piecewise_linear(SamplePath.from_csv(text))


def cmd_sample(a):
    spec = GaussianSpec(kind=a.kind, d=a.d, T=a.T, hurst=a.hurst)
    text = sample(spec, a.n, a.seed).to_csv()
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _brute_force(f, p, lo, hi):
    best, part = 0.0, [lo, hi]
    inner = range(lo + 1, hi)
    for k in range(hi - lo):
        for sub in itertools.combinations(inner, k):
            pts = [lo, *sub, hi]
            v = sum(f(s, t) ** p for s, t in zip(pts, pts[1:]))
            if v > best:
                best, part = v, pts
    return best ** (1 / p), part


def cmd_pvar(a):
    path = SamplePath.from_csv(Path(a.input))
    iv = _interval(a.interval) or (0, path.n_steps)
    if a.level == 1:
        res = path_p_variation(path, a.p, iv)

        def f(s, t):
            return float(np.linalg.norm(path.values[t] - path.values[s]))
        q = a.p
    else:
        rp = lift_piecewise_linear(path)
        q = a.p / 2
        res = second_p_variation(rp, q, iv)
        from .lift import eval_second

        def f(s, t):
            return float(np.linalg.norm(eval_second(rp, (s, t))))
    doc = {"level": a.level, "p": res.p, "value": res.value,
           "optimal_partition": res.optimal_partition}
    if iv[1] - iv[0] + 1 <= a.exact_max:
        bf, _ = _brute_force(f, res.p, *iv)
        doc["brute_force"] = bf
    _emit(doc, a.out)
    return 0


def cmd_greedy(a):
    from .variation import pvar_control
    rp = Level2RoughPath.from_json(Path(a.input))
    res = greedy_sequence(pvar_control(rp, a.p), a.alpha, _interval(a.interval))
    _emit({"taus": res.taus, "n_alpha": res.n_alpha, "alpha": res.alpha}, a.out)
    return 0


def cmd_tails(a):
    cfg = ex.TailConfig(driver={"kind": "bm", "d": a.d, "T": a.T}, mesh=a.mesh, trials=a.trials,
                        alpha=a.alpha, p=a.p, lambdas=_ints(a.lambdas), seed=a.seed)
    rep = ex.tail_experiment(cfg)
    doc = {"config": cfg.to_dict(), **rep.to_dict()}
    ok = rep.fit is not None and rep.fit.slope < 0 and rep.fit.r2 >= a.min_r2
    doc["checks"] = {"gaussian_tail_fit": ok, "positive_decreasing": rep.positive_decreasing}
    _emit(doc, a.out)
    if a.csv:
        from .greedy import survival
        u, surv, counts = survival(rep.samples)
        with open(a.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "survival", "exceedances"])
            w.writerows(zip(u.tolist(), surv.tolist(), counts.tolist()))
    return 0 if all(doc["checks"].values()) else 1


def _jumps_arg(a, T):
    if a.jumps in (None, "none"):
        return JumpTrajectory.constant(0, T)
    if a.jumps == "ctmc":
        return simulate_ctmc(symmetric_generator(a.rate), 0, T, a.seed + 1)
    doc = json.loads(Path(a.jumps).read_text())
    if "Q" in doc:
        return simulate_ctmc(doc["Q"], int(doc.get("initial", 0)), T, a.seed + 1)
    return JumpTrajectory(doc["jump_times"], doc["states"], doc.get("T", T))


def cmd_solve(a):
    fam = builtin_family(a.fields)
    if a.driver == "bm":
        rp = lift_piecewise_linear(sample(GaussianSpec(d=fam.d, T=a.T), a.mesh, a.seed))
    else:
        rp = _read_driver(a.driver)
    J = _jumps_arg(a, float(rp.times[-1]))
    y0 = _floats(a.y0) if a.y0 else [1.0] * fam.e
    sol = solve_switching_rde(fam, rp, J, y0)
    header = ["t"] + [f"y{k + 1}" for k in range(fam.e)] + ["segment"]
    lines = [",".join(header)]
    for t, y, s in zip(sol.path.times, sol.path.values, sol.segment_index):
        lines.append(",".join(["%.17g" % t, *("%.17g" % v for v in y), str(int(s))]))
    text = "\n".join(lines) + "\n"
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_wz(a):
    cfg = ex.ConvergenceConfig.from_json(a.config)
    rec, rep = ex.record_wong_zakai(cfg, a.workers)
    if a.out:
        ex.persist(rec, a.out)
    else:
        _emit(rec.summary)
    if a.csv:
        ex.write_csv(rep, a.csv)
    for name, ok in rep.checks.items():
        print(f"{name}: {'skipped' if ok is None else 'pass' if ok else 'FAIL'}", file=sys.stderr)
    return 0 if rep.passed else 1


def cmd_rate(a):
    lambdas = _ints(a.lambdas)
    if a.from_csv:
        cols = {}
        with open(a.from_csv) as fh:
            for row in csv.DictReader(fh):
                cols.setdefault(int(row["lambda"]), []).append(float(row[a.column]))
        samples = {lam: np.array(v) for lam, v in cols.items()}
    else:
        spec = GaussianSpec(kind=a.kind, d=a.d, T=a.T, hurst=a.hurst)
        samples = ex.interpolation_distances(spec, lambdas, a.trials, a.seed,
                                             distance=a.distance, p=a.p)
    res = ex.markov_rate_transfer(samples, a.gamma, q=a.q, r=a.r)
    _emit(res.to_dict(), a.out)
    return 0 if res.verdict == "implied" else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="roughswitch", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("sample", help="sample a Brownian or fractional Brownian path (CSV)")
    s.add_argument("--kind", choices=["bm", "fbm"], default="bm")
    s.add_argument("--hurst", type=float, default=0.5)
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--n", type=int, default=1024)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("pvar", help="exact grid p-variation of a path CSV")
    s.add_argument("input")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--level", type=int, choices=[1, 2], default=1)
    s.add_argument("--exact-max", type=int, default=12,
                   help="also enumerate all partitions when the grid has at most this many points")
    s.add_argument("--interval")
    s.add_argument("--out")
    s.set_defaults(func=cmd_pvar)

    s = sub.add_parser("greedy", help="greedy sequence of a rough path's p-variation control")
    s.add_argument("input", help="Level2RoughPath JSON")
    s.add_argument("--p", type=float, default=2.5)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--interval")
    s.add_argument("--out")
    s.set_defaults(func=cmd_greedy)

    s = sub.add_parser("tails", help="Monte Carlo tail study of N_alpha for Brownian lifts")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--p", type=float, default=2.5)
    s.add_argument("--mesh", type=int, default=512)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--lambdas", default="8,16,32")
    s.add_argument("--min-r2", type=float, default=0.9)
    s.add_argument("--out")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_tails)

    s = sub.add_parser("solve", help="solve a regime-switching RDE with a builtin field family")
    s.add_argument("--fields", choices=BUILTIN_FAMILIES, required=True)
    s.add_argument("--driver", default="bm", help="'bm' or a path CSV / rough path JSON file")
    s.add_argument("--jumps", default="none",
                   help="'none', 'ctmc', or a JSON file with a generator Q or a jump schedule")
    s.add_argument("--rate", type=float, default=2.0, help="exit rate for --jumps ctmc")
    s.add_argument("--mesh", type=int, default=1024)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--y0", help="comma-separated initial value")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("wz", help="Wong-Zakai convergence experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--csv")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_wz)

    s = sub.add_parser("rate", help="moment decay and exceedance rates of interpolation errors")
    s.add_argument("--kind", choices=["bm", "fbm"], default="bm")
    s.add_argument("--hurst", type=float, default=0.5)
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--lambdas", default="8,16,32,64,128,256,512")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--distance", choices=["sup", "rho"], default="sup")
    s.add_argument("--p", type=float, default=2.5)
    s.add_argument("--q", type=float, default=2.0)
    s.add_argument("--gamma", type=float, default=0.3)
    s.add_argument("--r", type=float, default=2.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--from-csv", help="read distances from a wz CSV instead of sampling")
    s.add_argument("--column", default="rho_metric")
    s.add_argument("--out")
    s.set_defaults(func=cmd_rate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
