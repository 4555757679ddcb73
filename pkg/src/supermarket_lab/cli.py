"""Batch experiment driver.

    supermarket-lab run  --config cfg.json [--seed S] [--out DIR]
                         [--replicas N] [--threads N]
    supermarket-lab plot --out DIR result.csv [...]

The config is a JSON document; model parameters are named keys (lambda, d, n,
epsilon, k, ell, g) under "params".  Exit codes: 0 success, 1 experiment-level
failure (a bound or validity check failed), 2 usage error.  Re-running a
config with the same seed yields byte-identical CSVs (the manifest carries the
only timestamp).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from pathlib import Path as FsPath

import numpy as np

from . import __version__
from .budgets import budgets
from .engine import simulate
from .errors import ConfigurationError, StateSpaceError
from .fixedpoint import fixed_point
from .params import Params
from .profile import Profile
from .regime import regime_check
from .sets import ell_star, g_star, sample_profile_in_N
from .vector import (
    QueueVector,
    adjacent_pair_in_N,
    coalescence_stats,
    relaxation_experiment,
)

EXPERIMENTS = (
    "regime-check", "simulate", "equilibrium", "mixing", "drift-audit",
    "walk-audit", "oracle-compare", "path-check", "relaxation",
)


def _params_from_config(cfg: dict) -> Params:
    p = cfg.get("params", {})
    kwargs = dict(
        n=int(p["n"]),
        d=int(p["d"]),
        lam=float(p["lambda"]),
        eps=float(p.get("epsilon", 0.1)),
    )
    if "k" in p:
        kwargs["k"] = int(p["k"])
    return Params(**kwargs)


def _write_csv(path: FsPath, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _manifest(out: FsPath, cfg: dict, seed: int, raw: bytes, extra: dict) -> None:
    man = {
        "code_version": __version__,
        "config_sha256": hashlib.sha256(raw).hexdigest(),
        "seed": seed,
        "created_unix": time.time(),
        **extra,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _horizon_guard(cfg: dict, params: Params, horizon: float) -> dict:
    """Compare the experiment horizon against s0 and q(ell, g); warn when short."""
    ell = float(cfg.get("params", {}).get("ell", max(params.k, ell_star(params))))
    g = float(cfg.get("params", {}).get("g", max(params.k, g_star(params))))
    try:
        b = budgets(params, ell, g)
    except ConfigurationError:
        return {}
    note = {
        "horizon": horizon,
        "q_budget": b.q,
        "horizon_over_q": horizon / b.q if b.q else None,
    }
    if horizon < b.q:
        note["warning"] = "horizon below the q(ell,g) budget (expected at desk scale)"
        print(f"warning: horizon {horizon:g} < q(ell,g) = {b.q:g}", file=sys.stderr)
    return note


# ---------------------------------------------------------------------------
# experiment bodies: each returns (exit_code, summary_dict)


def _run_regime_check(cfg, params, seed, out, threads):
    rep = regime_check(params)
    rows = [
        [q.ineq_id, q.description, q.lhs, q.rhs, q.relation, int(q.holds), kind]
        for kind, qs in (("hypothesis", rep.hypotheses), ("derived", rep.derived))
        for q in qs
    ]
    _write_csv(out / "regime.csv",
               ["id", "description", "lhs", "rhs", "relation", "holds", "kind"], rows)
    summary = {
        "overall": rep.overall,
        "failed": [q.ineq_id for q in rep.failed()],
        "notes": list(rep.notes),
        "derived_consistent": rep.derived_consistent(),
    }
    for note in rep.notes:
        print(note)
    print(f"regime overall: {'satisfied' if rep.overall else 'unsatisfied'}")
    return 0, summary


def _initial_profile(cfg, params) -> Profile:
    init = cfg.get("initial", "empty")
    if init == "empty":
        return Profile.empty(params.n)
    if init == "all-at-k":
        return Profile.all_at(params.n, params.k)
    if isinstance(init, list):
        return Profile(init, n=params.n)
    raise ConfigurationError(f"unknown initial state {init!r}")


def _run_simulate(cfg, params, seed, out, threads):
    steps = int(cfg.get("steps", 10**6))
    burnin = int(cfg.get("burnin", 0))
    obs_every = int(cfg.get("observe_every", max(steps // 1000, 1)))
    log = simulate(
        params, _initial_profile(cfg, params), steps=steps, seed=seed,
        obs_every=obs_every, member_sets=tuple(cfg.get("member_sets", ())),
        burnin=burnin, cap=cfg.get("cap"),
        eps=cfg.get("params", {}).get("epsilon"),
    )
    log.to_csv(out / "trajectory.csv")
    summary = log.summary()
    summary["horizon_guard"] = _horizon_guard(cfg, params, steps + burnin)
    return 0, summary


def _run_equilibrium(cfg, params, seed, out, threads):
    steps = int(cfg.get("steps", 10**7))
    burnin = int(cfg.get("burnin", min(10 * params.n / (1 - params.lam), 10**8)))
    j_max = int(cfg.get("levels", max(params.k + 2, 6)))
    log = simulate(
        params, _initial_profile(cfg, params), steps=steps, seed=seed,
        burnin=burnin, acc_levels=j_max,
    )
    refs = {}
    if params.lam > 0:
        fp = fixed_point(params, j_max)
        refs["pi"] = [fp.pi(j)[0] for j in range(1, j_max + 1)]
        refs["tilde_u"] = [
            max(0.0, 1.0 - float(v)) for v in fp.tilde_u_deficit[:j_max]
        ]
        if params.d == 1:
            refs["geometric"] = [params.lam**j for j in range(1, j_max + 1)]
    rows = []
    for j in range(1, j_max + 1):
        row = [j, repr(float(log.mean_u[j - 1]))]
        row.append(repr(refs["pi"][j - 1]) if "pi" in refs else "")
        row.append(repr(refs["tilde_u"][j - 1]) if "tilde_u" in refs else "")
        row.append(repr(refs["geometric"][j - 1]) if "geometric" in refs else "")
        rows.append(row)
    _write_csv(out / "equilibrium.csv", ["j", "mean_u", "pi", "tilde_u", "geometric"], rows)
    print(f"throughput: {log.metadata['steps_per_s']:.3g} steps/s")
    summary = {
        "mean_u": [float(v) for v in log.mean_u[:j_max]],
        "refs": refs,
        "burnin": burnin,
        "steps": steps,
        "horizon_guard": _horizon_guard(cfg, params, steps + burnin),
    }
    return 0, summary


def _run_mixing(cfg, params, seed, out, threads):
    d_list = [int(v) for v in cfg.get("d_list", [params.d])]
    replicas = int(cfg.get("replicas", 200))
    horizon = int(cfg.get("horizon", 10**6))
    eps = float(cfg.get("params", {}).get("epsilon", params.eps))
    rows = []
    medians = []
    for dv in d_list:
        pd_ = Params(n=params.n, d=dv, lam=params.lam, eps=eps)
        gen_pair = lambda r, gen, _p=pd_: adjacent_pair_in_N(_p, eps, gen)
        res = coalescence_stats(pd_, gen_pair, replicas, horizon, seed)
        t = res.coalesce_t
        t_ok = t[t >= 0]
        med = float(np.median(t_ok)) if len(t_ok) else math.nan
        medians.append(med)
        rows.append([
            dv, pd_.k, replicas, horizon, len(t) - len(t_ok), med,
            float(np.quantile(t_ok, 0.25)) if len(t_ok) else math.nan,
            float(np.quantile(t_ok, 0.75)) if len(t_ok) else math.nan,
        ])
    _write_csv(
        out / "mixing.csv",
        ["d", "k", "replicas", "horizon", "censored", "median_T", "q25_T", "q75_T"],
        rows,
    )
    summary = {"d_list": d_list, "medians": medians}
    summary["horizon_guard"] = _horizon_guard(cfg, params, horizon)
    return 0, summary


def _run_drift_audit(cfg, params, seed, out, threads):
    from .drift import CSV_HEADER, sweep_reports

    states = int(cfg.get("states", 2000))
    reports = sweep_reports(params, states, seed)
    rows = [r.row() for r in reports]
    _write_csv(out / "drift.csv", CSV_HEADER, rows)
    bad = [r for r in reports if not r.ok]
    summary = {"states": states, "checks": len(reports), "violations": len(bad)}
    return (1 if bad else 0), summary


def _run_walk_audit(cfg, params, seed, out, threads):
    from .walks import CSV_HEADER, default_grid

    trials = int(cfg.get("trials", 20000))
    verdicts = default_grid(trials, seed)
    _write_csv(out / "walks.csv", CSV_HEADER, [v.row() for v in verdicts])
    bad = [v for v in verdicts if not (v.ok_bound and v.ok_oracle)]
    return (1 if bad else 0), {"experiments": len(verdicts), "violations": len(bad)}


def _run_oracle_compare(cfg, params, seed, out, threads):
    from . import kernels
    from .oracle import build_kernel, stationary, tv_distance

    cap = int(cfg.get("cap", 4))
    samples = int(cfg.get("samples", 2_000_000))
    if params.n > 4 or cap > 5:
        raise ConfigurationError("oracle-compare is for n <= 4, cap <= 5")
    chain = build_kernel(params.n, cap, params.d, params.lam, "profile")
    pi = stationary(chain)
    hidx = chain.hist_index()
    radix = params.n + 1

    tail = np.zeros(cap + 16, dtype=np.int64)
    tail[0] = params.n
    hist = np.zeros(radix ** (cap + 1), dtype=np.int64)
    acc = np.zeros(1, dtype=np.float64)
    kernels.profile_chain(
        tail, params.n, params.d, params.lam, samples, np.uint64(seed), 0, cap,
        0, np.zeros(0), acc, 0, 0, np.zeros((0, 3), dtype=np.int64),
        1, radix, cap + 1, hist, np.zeros(kernels.N_COUNTERS, dtype=np.int64),
    )
    emp_profile = hist[hidx] / samples

    lengths = np.zeros(params.n, dtype=np.int64)
    hist_v = np.zeros(radix ** (cap + 1), dtype=np.int64)
    kernels.vector_chain_hist(
        lengths, params.d, params.lam, samples, np.uint64(seed + 1), 0, cap,
        radix, cap + 1, hist_v, 0,
    )
    emp_vector = hist_v[hidx] / samples

    tv_p = tv_distance(emp_profile, pi)
    tv_v = tv_distance(emp_vector, pi)
    rows = [
        [str(s), repr(float(pi[i])), repr(float(emp_profile[i])), repr(float(emp_vector[i]))]
        for i, s in enumerate(chain.states)
    ]
    _write_csv(out / "oracle.csv", ["state", "exact", "profile_engine", "vector_engine"], rows)
    thr = float(cfg.get("tv_threshold", 0.01))
    summary = {"tv_profile": tv_p, "tv_vector": tv_v, "threshold": thr, "samples": samples}
    return (1 if max(tv_p, tv_v) > thr else 0), summary


def _run_path_check(cfg, params, seed, out, threads):
    from .paths import length_cap, path_in_N, validate_path

    pairs = int(cfg.get("pairs", 20))
    eps = float(cfg.get("params", {}).get("epsilon", params.eps))
    gen = np.random.default_rng(seed)

    def one(i):
        g2 = np.random.default_rng(gen.integers(2**63) + i)
        x = QueueVector.from_profile(sample_profile_in_N(params, eps, g2))
        y = QueueVector.from_profile(sample_profile_in_N(params, eps, g2))
        path = path_in_N(x, y, params, eps)
        rep = validate_path(path, y, params, eps)
        return [i, len(path), repr(rep.length_cap), int(rep.valid)], rep.valid

    results = [one(i) for i in range(pairs)]
    rows = [r for r, _ in results]
    ok = all(v for _, v in results)
    _write_csv(out / "paths.csv", ["pair", "length", "cap", "valid"], rows)
    return (0 if ok else 1), {"pairs": pairs, "all_valid": ok, "cap": length_cap(params)}


def _run_relaxation(cfg, params, seed, out, threads):
    eps = float(cfg.get("params", {}).get("epsilon", params.eps))
    replicas = int(cfg.get("replicas", 50))
    res = relaxation_experiment(params, eps, replicas, seed, threads=max(threads, 1))
    if res.skipped:
        print(f"relaxation experiment skipped: {res.reason}")
        return 0, {"skipped": True, "reason": res.reason}
    rows = [
        [int(s), repr(float(q))]
        for s, q in zip(res.snapshot_step, res.qk_mean)
    ]
    _write_csv(out / "relaxation.csv", ["step", "mean_Q_k"], rows)
    summary = {
        "skipped": False,
        "start_qk": res.start_qk,
        "mean_step_change": res.mean_step_change,
        "stderr": res.stderr,
        "ceiling_2eps": res.ceiling,
        "exact_drift_mean": res.exact_drift_mean,
        "exact_drift_max": res.exact_drift_max,
        "in_set_fraction": res.in_set_fraction,
        "replicas": replicas,
    }
    return 0, summary


_BODIES = {
    "regime-check": _run_regime_check,
    "simulate": _run_simulate,
    "equilibrium": _run_equilibrium,
    "mixing": _run_mixing,
    "drift-audit": _run_drift_audit,
    "walk-audit": _run_walk_audit,
    "oracle-compare": _run_oracle_compare,
    "path-check": _run_path_check,
    "relaxation": _run_relaxation,
}


def run(config_path: str, seed: int | None, out_dir: str, replicas: int | None,
        threads: int) -> int:
    raw = FsPath(config_path).read_bytes()
    cfg = json.loads(raw)
    exp = cfg.get("experiment")
    if exp not in EXPERIMENTS:
        print(f"unknown experiment id {exp!r}; choose from {EXPERIMENTS}", file=sys.stderr)
        return 2
    try:
        params = _params_from_config(cfg)
    except (KeyError, ConfigurationError, ValueError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    if replicas is not None:
        cfg["replicas"] = replicas
    seed = int(cfg.get("seed", 0)) if seed is None else seed
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        code, summary = _BODIES[exp](cfg, params, seed, out, threads)
    except (ConfigurationError, StateSpaceError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    summary["experiment"] = exp
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    _manifest(out, cfg, seed, raw, {"experiment": exp})
    return code


# ---------------------------------------------------------------------------
# plots


def plot(files: list[str], out_dir: str) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    code = 0
    for f in files:
        path = FsPath(f)
        try:
            with open(path) as fh:
                rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        except OSError as exc:
            print(f"cannot read {f}: {exc}", file=sys.stderr)
            code = 2
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        name = path.stem
        if len(rows) <= 1:
            ax.text(0.5, 0.5, f"{name}: no data rows", ha="center", va="center")
            print(f"warning: {f} has no data rows; empty figure", file=sys.stderr)
        else:
            header, data = rows[0], rows[1:]
            if header[:2] == ["j", "mean_u"]:
                j = [int(r[0]) for r in data]
                ax.plot(j, [float(r[1]) for r in data], "o-", label="simulated mean u_j")
                for col, lbl in ((2, "pi"), (3, "linearized"), (4, "geometric")):
                    if any(r[col] for r in data):
                        ax.plot(j, [float(r[col]) for r in data], "--", label=lbl)
                ax.set_xlabel("level j")
                ax.set_ylabel("u_j")
                ax.legend()
            elif header[0] == "d" and "median_T" in header:
                mi = header.index("median_T")
                ax.plot([int(r[0]) for r in data], [float(r[mi]) for r in data], "o-")
                ax.set_xlabel("d")
                ax.set_ylabel("median coalescence time")
            elif header[:2] == ["step", "mean_Q_k"]:
                ax.plot([int(r[0]) for r in data], [float(r[1]) for r in data])
                ax.set_xlabel("step")
                ax.set_ylabel("mean Q_k")
            else:
                print(f"unrecognized schema in {f} ({header[:4]}...)", file=sys.stderr)
                plt.close(fig)
                code = 2
                continue
        ax.set_title(name)
        target = out / f"{name}.svg"
        fig.savefig(target, format="svg")
        plt.close(fig)
        print(f"wrote {target}")
    return code


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="supermarket-lab", description=__doc__)
    sub = ap.add_subparsers(dest="cmd")
    rp = sub.add_parser("run", help="run an experiment from a config file")
    rp.add_argument("--config", required=True)
    rp.add_argument("--seed", type=int, default=None)
    rp.add_argument("--out", default="results")
    rp.add_argument("--replicas", type=int, default=None)
    rp.add_argument("--threads", type=int, default=1)
    pp = sub.add_parser("plot", help="render SVG figures from result CSVs")
    pp.add_argument("files", nargs="+")
    pp.add_argument("--out", default="figures")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if args.cmd == "run":
        return run(args.config, args.seed, args.out, args.replicas, args.threads)
    if args.cmd == "plot":
        return plot(args.files, args.out)
    ap.print_help()
    return 2


if __name__ == "__main__":
    sys.exit(main())
