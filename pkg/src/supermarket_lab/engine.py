"""Profile-engine drivers: batch simulation, observation logs, hitting/exit clocks."""

from __future__ import annotations

import csv
import json
import re
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .budgets import budgets
from .coefficients import coefficients
from .errors import ConfigurationError
from .functionals import all_q, p_functional
from .params import Params
from .profile import Profile, ProfileEventSource, step
from .sets import set_membership

SCHEMA_VERSION = "1"


@dataclass
class ObservationLog:
    params: Params
    seed: int
    steps: int
    burnin: int
    obs_step: np.ndarray
    tails: np.ndarray        # int64 [rows, obs_levels + 1], tail(0..obs_levels)
    max_len: np.ndarray
    mass: np.ndarray
    q: np.ndarray | None     # [rows, k] when k >= 2
    p: np.ndarray | None
    memberships: dict[str, np.ndarray] = field(default_factory=dict)
    mean_u: np.ndarray | None = None   # time-average over the measured window
    mean_mass: float = 0.0
    counters: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def u(self) -> np.ndarray:
        return self.tails[:, 1:] / self.params.n

    def to_csv(self, path) -> None:
        n_levels = self.tails.shape[1] - 1
        k = self.q.shape[1] if self.q is not None else 0
        header = (
            ["step"]
            + [f"u_{j}" for j in range(1, n_levels + 1)]
            + [f"Q_{j}" for j in range(1, k + 1)]
            + (["P"] if self.p is not None else [])
            + ["max_len", "mass"]
            + [f"in_{s}" for s in sorted(self.memberships)]
        )
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"# schema={SCHEMA_VERSION}"])
            w.writerow(header)
            u = self.u
            for r in range(len(self.obs_step)):
                row = [int(self.obs_step[r])]
                row += [repr(float(v)) for v in u[r]]
                if self.q is not None:
                    row += [repr(float(v)) for v in self.q[r]]
                if self.p is not None:
                    row.append(repr(float(self.p[r])))
                row += [int(self.max_len[r]), int(self.mass[r])]
                row += [int(self.memberships[s][r]) for s in sorted(self.memberships)]
                w.writerow(row)

    def summary(self) -> dict:
        # timing lives in the run manifest; the summary must be reproducible
        meta = {k: v for k, v in self.metadata.items() if k not in ("elapsed_s", "steps_per_s")}
        out = {
            "schema": SCHEMA_VERSION,
            "params": {
                "n": self.params.n,
                "d": self.params.d,
                "lam": self.params.lam,
                "eps": self.params.eps,
                "k": self.params.k,
            },
            "seed": self.seed,
            "steps": self.steps,
            "burnin": self.burnin,
            "counters": self.counters,
            "metadata": meta,
        }
        if self.mean_u is not None:
            out["mean_u"] = [float(v) for v in self.mean_u]
            out["mean_mass"] = float(self.mean_mass)
        return out

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def default_burnin(params: Params, cap_steps: int = 10**8) -> int:
    """q(ell*, g*) when it fits under the cap, else 10 n (1-lam)^-1."""
    try:
        from .sets import ell_star, g_star

        q = budgets(params, max(params.k, ell_star(params)), max(params.k, g_star(params))).q
    except ConfigurationError:
        q = float("inf")
    if q <= cap_steps:
        return int(q)
    return int(10 * params.n / (1.0 - params.lam))


def _run_kernel_phase(
    tail_alloc: np.ndarray,
    params: Params,
    steps: int,
    seed: int,
    t0: int,
    cap: int,
    acc_levels: int,
    obs_every: int,
    obs_levels: int,
) -> tuple[np.ndarray, np.ndarray, float, np.ndarray, np.ndarray]:
    rows = steps // obs_every if obs_every > 0 else 0
    obs = np.zeros((rows, obs_levels + 3), dtype=np.int64)
    acc = np.zeros(max(acc_levels, 0), dtype=np.float64)
    acc_mass = np.zeros(1, dtype=np.float64)
    counters = np.zeros(kernels.N_COUNTERS, dtype=np.int64)
    status = kernels.profile_chain(
        tail_alloc, params.n, params.d, params.lam,
        steps, np.uint64(seed), t0, cap,
        acc_levels, acc, acc_mass,
        obs_every, obs_levels, obs,
        0, 0, 0, np.zeros(1, dtype=np.int64),
        counters,
    )
    if status == kernels.OVERFLOW:
        raise MemoryError("grow")
    return obs, acc, acc_mass[0], counters, tail_alloc


def simulate(
    params: Params,
    initial: Profile,
    steps: int,
    seed: int,
    obs_every: int = 0,
    obs_levels: int | None = None,
    member_sets: tuple[str, ...] = (),
    functional_levels: int | None = None,
    cap: int | None = None,
    burnin: int = 0,
    acc_levels: int | None = None,
    eps: float | None = None,
    ell: float | None = None,
    g: float | None = None,
) -> ObservationLog:
    """Deterministic batch run of the profile chain.

    The time average (``mean_u``, ``mean_mass``) covers the ``steps`` after
    ``burnin``; snapshots likewise start after burn-in.  Identical
    (seed, arguments) give a bit-identical log.
    """
    if steps < 0 or burnin < 0:
        raise ConfigurationError("steps and burnin must be >= 0")
    if initial.n != params.n:
        raise ConfigurationError("initial profile size != params.n")
    k = params.k
    if functional_levels is None:
        functional_levels = k if k >= 2 else 0
    if functional_levels > k:
        raise ConfigurationError(
            f"observer requested functional level {functional_levels} > k = {k}"
        )
    if obs_levels is None:
        obs_levels = max(k + 1, 8)
    if acc_levels is None:
        acc_levels = max(k + 2, 8)
    for s in member_sets:
        if s not in ("N", "Hred", "Ired", "P", "H", "I") and not re.fullmatch(r"[A-E][01]", s):
            raise ConfigurationError(f"unknown membership observer {s!r}")

    cap_arg = -1 if cap is None else int(cap)
    alloc = max(initial.max_length() + 2, obs_levels + 2, acc_levels + 2, 64) + 64
    t_start = time.perf_counter()
    while True:
        tail = np.zeros(alloc, dtype=np.int64)
        tc = initial.tail_counts(min(alloc - 1, max(initial.max_length(), 1)))
        tail[: len(tc)] = tc
        tail[0] = params.n
        try:
            if burnin:
                _run_kernel_phase(
                    tail, params, burnin, seed, 0, cap_arg, 0, 0, obs_levels
                )
            obs, acc, acc_mass, counters, tail = _run_kernel_phase(
                tail, params, steps, seed, burnin, cap_arg,
                acc_levels, obs_every, obs_levels,
            )
        except MemoryError:
            alloc *= 4
            continue
        break
    elapsed = time.perf_counter() - t_start

    rows = len(obs)
    init_tails = initial.tail_counts(obs_levels)
    first = np.concatenate(
        [init_tails, [initial.max_length(), initial.norm1()]]
    ).reshape(1, -1)
    all_rows = np.vstack([first, obs]) if rows else first
    obs_step = np.concatenate(
        [[0], burnin + obs_every * np.arange(1, rows + 1)]
    ) if obs_every > 0 else np.array([0])

    tails_out = all_rows[:, : obs_levels + 1]
    max_len = all_rows[:, obs_levels + 1]
    mass = all_rows[:, obs_levels + 2]

    q = p = None
    table = coefficients(params) if (k >= 2 and params.lambda_d >= 4.0) else None
    if table is not None:
        profs = [Profile.from_tail_counts(params.n, r[1 : k + 2]) for r in _padded(tails_out, k + 1)]
        q = np.array([all_q(pr, table) for pr in profs])
        p = np.array([p_functional(pr, table) for pr in profs])

    memberships = {}
    if member_sets:
        profs_full = [
            Profile.from_tail_counts(params.n, r[1:]) for r in tails_out
        ]
        for sid in member_sets:
            memberships[sid] = np.array(
                [
                    set_membership(pr, sid, params, eps=eps, ell=ell, g=g)
                    for pr in profs_full
                ],
                dtype=bool,
            )

    mean_u = acc / max(steps, 1) / params.n if acc_levels else None
    log = ObservationLog(
        params=params,
        seed=seed,
        steps=steps,
        burnin=burnin,
        obs_step=obs_step,
        tails=tails_out,
        max_len=max_len,
        mass=mass,
        q=q,
        p=p,
        memberships=memberships,
        mean_u=mean_u,
        mean_mass=acc_mass / max(steps, 1),
        counters={
            "arrivals": int(counters[kernels.ARRIVALS]),
            "departures": int(counters[kernels.DEPARTURES]),
            "idles": int(counters[kernels.IDLES]),
            "rejected": int(counters[kernels.REJECTED]),
        },
        metadata={
            "cap": cap,
            "elapsed_s": elapsed,
            "steps_per_s": (steps + burnin) / elapsed if elapsed > 0 else None,
            "engine": "profile-kernel",
            "schema": SCHEMA_VERSION,
        },
    )
    return log


def _padded(tails_out: np.ndarray, need: int):
    if tails_out.shape[1] >= need + 1:
        return tails_out
    pad = np.zeros((tails_out.shape[0], need + 1 - tails_out.shape[1]), dtype=np.int64)
    return np.hstack([tails_out, pad])


# ---------------------------------------------------------------------------
# hitting / exit clocks


def ledger_order(k: int) -> list[str]:
    """B, C, D, E, G^{k-1}, ..., G^1, H."""
    return ["B", "C", "D", "E"] + [f"G{j}" for j in range(k - 1, 0, -1)] + ["H"]


def _member(profile, token: str, tight: bool, params, eps, ell, g) -> bool:
    if token == "H":
        return set_membership(profile, "H", params, eps=eps, ell=ell, g=g)
    if token.startswith("G"):
        j = int(token[1:])
        return set_membership(
            profile, "G0" if tight else "G1", params, eps=eps, ell=ell, g=g, j=j
        )
    if token == "A":
        return set_membership(profile, "A0" if tight else "A1", params, eps=eps, ell=ell, g=g)
    return set_membership(profile, token + ("0" if tight else "1"), params, eps=eps, ell=ell, g=g)


@dataclass
class HitExitRecord:
    token: str
    hit: int | None      # None = censored at horizon
    exit: int | None     # None = censored (or never hit)


def hitting_exit_instrument(
    params: Params,
    initial: Profile,
    horizon: int,
    seed: int,
    predicates: list[str] | None = None,
    eps: float | None = None,
    ell: float | None = None,
    g: float | None = None,
) -> list[HitExitRecord]:
    """First-entry and first-exit clocks along the ordered set ledger.

    T_S = first t >= T_R with X_t in S_0 (R the previous set, T for the first
    set referenced to 0); the exit clock of S starts at T_S and fires on
    leaving S_1.  Horizon exhaustion reports the open times as censored.
    """
    if predicates is None:
        predicates = ledger_order(params.k)
    prof = initial.copy()
    src = ProfileEventSource(seed)
    hits: dict[str, int | None] = {}
    exits: dict[str, int | None] = {}
    frontier = 0  # index of the next set waiting for its hit

    def probe(t: int) -> None:
        nonlocal frontier
        while frontier < len(predicates):
            tok = predicates[frontier]
            if _member(prof, tok, True, params, eps, ell, g):
                hits[tok] = t
                frontier += 1
            else:
                break
        for idx in range(frontier):
            tok = predicates[idx]
            if tok in hits and tok not in exits:
                if not _member(prof, tok, False, params, eps, ell, g):
                    exits[tok] = t

    probe(0)
    for t in range(1, horizon + 1):
        step(prof, params, src)
        probe(t)

    return [
        HitExitRecord(token=tok, hit=hits.get(tok), exit=exits.get(tok))
        for tok in predicates
    ]
