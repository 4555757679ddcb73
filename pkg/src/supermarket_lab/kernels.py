"""numba kernels behind the profile and vector engines.

The random streams are bit-for-bit the ones in :mod:`supermarket_lab.rng`; the
pure-Python steppers and these kernels must produce identical trajectories for
identical (seed, t0) (pinned by tests).  All kernels are single-threaded and
nogil; replicas fan out above this layer.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

U64 = np.uint64
_GAMMA = U64(0x9E3779B97F4A7C15)
_SALT = U64(0xD6E8FEB86659FD93)
_C1 = U64(0xBF58476D1CE4E5B9)
_C2 = U64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / (1 << 53)

OK = 0
OVERFLOW = 1

# counter slots for profile_chain
N_COUNTERS = 4
ARRIVALS, DEPARTURES, IDLES, REJECTED = 0, 1, 2, 3

# violation slots for coupled_pairs
N_VIOL = 4
V_L1, V_LINF, V_ORDER, V_ADJ = 0, 1, 2, 3


@njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _C1
    z = (z ^ (z >> U64(27))) * _C2
    return z ^ (z >> U64(31))


@njit(inline="always")
def _stream_key(seed, stream):
    return _mix64(seed + stream * _SALT)


@njit(inline="always")
def _uniform(key, t, i):
    x = _mix64(key + U64(t) * _GAMMA + U64(i) * _SALT)
    return (x >> U64(11)) * _INV_2_53


@njit(inline="always")
def _uindex(key, t, i, n):
    j = int(_uniform(key, t, i) * n)
    if j >= n:
        j = n - 1
    return j


@njit(cache=True)
def replica_seed(seed, r):
    return _mix64(U64(seed) + U64(r + 1) * _GAMMA) ^ _SALT


@njit(inline="always")
def _tail_pow(tail_j, n, d, inv_n):
    if tail_j == n:
        return 1.0
    if tail_j == 0:
        return 0.0
    u = tail_j * inv_n
    if d == 1:
        return u
    return math.pow(u, d)


@njit(cache=True, nogil=True)
def profile_chain(
    tail,        # int64[:], tail[j] = #queues of length >= j, tail[0] = n
    n, d, lam,
    steps,
    seed, t0,
    cap,         # -1 = uncapped, else arrivals at level >= cap are rejected
    acc_levels,  # accumulate sums of tail[1..acc_levels] over the run
    acc,         # float64[acc_levels]
    acc_mass,    # float64[1], accumulates ||x||_1 over the run
    obs_every,   # 0 = no snapshots
    obs_levels,
    obs_tails,   # int64[rows, obs_levels + 3]: tail[0..obs_levels], max_len, ||x||_1
    hist_enable,  # profile-visit histogram over a capped state space
    hist_radix,   # n + 1
    hist_levels,  # number of count slots (cap + 1)
    hist,         # int64[hist_radix ** hist_levels]  (tiny spaces only)
    counters,     # int64[N_COUNTERS]
):
    seed = U64(seed)
    key_ev = _stream_key(seed, U64(0))
    key_lv = _stream_key(seed, U64(1))
    inv_n = 1.0 / n
    arr_p = lam / (1.0 + lam)
    alloc = tail.shape[0]

    pcache = np.zeros(alloc, dtype=np.float64)
    lmax = 0
    for j in range(alloc):
        if tail[j] > 0:
            lmax = j
        pcache[j] = _tail_pow(tail[j], n, d, inv_n)

    norm1 = np.int64(0)
    for j in range(1, alloc):
        norm1 += tail[j]

    obs_row = 0
    for s in range(steps):
        t = t0 + s
        u1 = _uniform(key_ev, t, 0)
        u2 = _uniform(key_lv, t, 0)
        if u1 < arr_p:
            j = 0
            while u2 <= pcache[j + 1]:
                j += 1
            if cap >= 0 and j >= cap:
                counters[REJECTED] += 1
            else:
                if j + 1 > alloc - 2:
                    return OVERFLOW
                tail[j + 1] += 1
                pcache[j + 1] = _tail_pow(tail[j + 1], n, d, inv_n)
                if j + 1 > lmax:
                    lmax = j + 1
                norm1 += 1
                counters[ARRIVALS] += 1
        else:
            i = 0
            scaled = u2 * n
            while scaled < tail[i + 1]:
                i += 1
            if i == 0:
                counters[IDLES] += 1
            else:
                tail[i] -= 1
                pcache[i] = _tail_pow(tail[i], n, d, inv_n)
                if i == lmax and tail[i] == 0:
                    while lmax > 0 and tail[lmax] == 0:
                        lmax -= 1
                norm1 -= 1
                counters[DEPARTURES] += 1

        for j in range(1, acc_levels + 1):
            acc[j - 1] += tail[j]
        acc_mass[0] += norm1

        if hist_enable != 0:
            idx = 0
            mult = 1
            for lev in range(hist_levels):
                nxt = tail[lev + 1] if lev + 1 < alloc else 0
                idx += (tail[lev] - nxt) * mult
                mult *= hist_radix
            hist[idx] += 1

        if obs_every > 0 and (s + 1) % obs_every == 0:
            for j in range(obs_levels + 1):
                obs_tails[obs_row, j] = tail[j] if j < alloc else 0
            obs_tails[obs_row, obs_levels + 1] = lmax
            obs_tails[obs_row, obs_levels + 2] = norm1
            obs_row += 1
    return OK


@njit(cache=True, nogil=True)
def profile_one_step_hist(
    tail,        # fixed start state, not mutated
    n, d, lam,
    reps,
    seed,
    cap,
    hist_radix,
    hist_levels,
    hist,        # destination-profile visit counts over reps independent steps
):
    seed = U64(seed)
    key_ev = _stream_key(seed, U64(0))
    key_lv = _stream_key(seed, U64(1))
    inv_n = 1.0 / n
    arr_p = lam / (1.0 + lam)
    alloc = tail.shape[0]

    pcache = np.zeros(alloc, dtype=np.float64)
    for j in range(alloc):
        pcache[j] = _tail_pow(tail[j], n, d, inv_n)

    radix_pow = np.ones(hist_levels + 1, dtype=np.int64)
    for lev in range(1, hist_levels + 1):
        radix_pow[lev] = radix_pow[lev - 1] * hist_radix
    base = 0
    for lev in range(hist_levels):
        nxt = tail[lev + 1] if lev + 1 < alloc else 0
        base += (tail[lev] - nxt) * radix_pow[lev]

    for rep in range(reps):
        u1 = _uniform(key_ev, rep, 0)
        u2 = _uniform(key_lv, rep, 0)
        idx = base
        if u1 < arr_p:
            j = 0
            while u2 <= pcache[j + 1]:
                j += 1
            if not (cap >= 0 and j >= cap):
                idx += radix_pow[j + 1] - radix_pow[j]
        else:
            i = 0
            scaled = u2 * n
            while scaled < tail[i + 1]:
                i += 1
            if i > 0:
                idx += radix_pow[i - 1] - radix_pow[i]
        hist[idx] += 1
    return OK


@njit(cache=True, nogil=True)
def vector_chain_hist(
    lengths,     # int64[n], mutated in place
    d, lam,
    steps,
    seed, t0,
    cap,         # -1 uncapped
    hist_radix,
    hist_levels,
    hist,        # profile-visit counts (lumped on the fly)
    burnin,      # steps before recording starts
):
    n = lengths.shape[0]
    seed = U64(seed)
    key_ev = _stream_key(seed, U64(0))
    key_tg = _stream_key(seed, U64(1))
    key_ch = _stream_key(seed, U64(2))
    arr_p = lam / (1.0 + lam)

    radix_pow = np.ones(hist_levels + 1, dtype=np.int64)
    for lev in range(1, hist_levels + 1):
        radix_pow[lev] = radix_pow[lev - 1] * hist_radix
    idx = 0
    for q in range(n):
        idx += radix_pow[lengths[q]]
    # counts encoding: idx = sum over levels of counts[lev] * radix^lev
    # (sum of radix^length over queues gives exactly that)

    for s in range(steps):
        t = t0 + s
        if _uniform(key_ev, t, 0) < arr_p:
            best_q = -1
            best_len = np.int64(1 << 60)
            for i in range(d):
                q = _uindex(key_ch, t, i, n)
                if lengths[q] < best_len:
                    best_len = lengths[q]
                    best_q = q
            if not (cap >= 0 and best_len >= cap):
                lengths[best_q] += 1
                idx += radix_pow[best_len + 1] - radix_pow[best_len]
        else:
            q = _uindex(key_tg, t, 0, n)
            if lengths[q] > 0:
                lv = lengths[q]
                lengths[q] -= 1
                idx += radix_pow[lv - 1] - radix_pow[lv]
        if s >= burnin:
            hist[idx] += 1
    return OK


@njit(cache=True, nogil=True)
def vector_one_step_hist(
    lengths,     # fixed start state, not mutated
    d, lam,
    reps,
    seed,
    cap,
    hist_radix,
    hist_levels,
    hist,
):
    n = lengths.shape[0]
    seed = U64(seed)
    key_ev = _stream_key(seed, U64(0))
    key_tg = _stream_key(seed, U64(1))
    key_ch = _stream_key(seed, U64(2))
    arr_p = lam / (1.0 + lam)

    radix_pow = np.ones(hist_levels + 1, dtype=np.int64)
    for lev in range(1, hist_levels + 1):
        radix_pow[lev] = radix_pow[lev - 1] * hist_radix
    base = 0
    for q in range(n):
        base += radix_pow[lengths[q]]

    for rep in range(reps):
        idx = base
        if _uniform(key_ev, rep, 0) < arr_p:
            best_q = -1
            best_len = np.int64(1 << 60)
            for i in range(d):
                q = _uindex(key_ch, rep, i, n)
                if lengths[q] < best_len:
                    best_len = lengths[q]
                    best_q = q
            if not (cap >= 0 and best_len >= cap):
                idx += radix_pow[best_len + 1] - radix_pow[best_len]
        else:
            q = _uindex(key_tg, rep, 0, n)
            if lengths[q] > 0:
                idx += radix_pow[lengths[q] - 1] - radix_pow[lengths[q]]
        hist[idx] += 1
    return OK


@njit(cache=True, nogil=True)
def coupled_pairs(
    la, lb,        # int64[R, n]: the two coupled copies per replica
    d, lam,
    steps,
    seed, t0,
    check_order,   # uint8[R]: 1 = count steps with any coordinate la > lb
    check_adj,     # uint8[R]: 1 = count steps with l1 distance > 1
    stop_on_coalesce,
    coalesce_t,    # int64[R]: first step count with la == lb, -1 censored
    viol,          # int64[N_VIOL]
    hist_cap,      # exclusive upper bound on any |la - lb| over the run
):
    R, n = la.shape
    arr_p = lam / (1.0 + lam)

    diff_hist = np.zeros(hist_cap, dtype=np.int64)

    for r in range(R):
        for v in range(hist_cap):
            diff_hist[v] = 0
        l1 = np.int64(0)
        linf = np.int64(0)
        nbad = np.int64(0)
        for q in range(n):
            dv = la[r, q] - lb[r, q]
            av = dv if dv >= 0 else -dv
            diff_hist[av] += 1
            l1 += av
            if av > linf:
                linf = av
            if dv > 0:
                nbad += 1
        coalesce_t[r] = 0 if l1 == 0 else -1
        if l1 == 0 and stop_on_coalesce:
            continue

        rs = replica_seed(seed, r)
        key_ev = _stream_key(rs, U64(0))
        key_tg = _stream_key(rs, U64(1))
        key_ch = _stream_key(rs, U64(2))

        for s in range(steps):
            t = t0 + s
            qa = -1
            qb = -1
            if _uniform(key_ev, t, 0) < arr_p:
                ba = np.int64(1 << 60)
                bb = np.int64(1 << 60)
                for i in range(d):
                    q = _uindex(key_ch, t, i, n)
                    if la[r, q] < ba:
                        ba = la[r, q]
                        qa = q
                    if lb[r, q] < bb:
                        bb = lb[r, q]
                        qb = q
                d1_old = la[r, qa] - lb[r, qa]
                d2_old = la[r, qb] - lb[r, qb]
                la[r, qa] += 1
                lb[r, qb] += 1
            else:
                q = _uindex(key_tg, t, 0, n)
                if la[r, q] > 0:
                    qa = q
                if lb[r, q] > 0:
                    qb = q
                d1_old = la[r, q] - lb[r, q]
                d2_old = d1_old
                if qa >= 0:
                    la[r, q] -= 1
                if qb >= 0:
                    lb[r, q] -= 1
                qa = q if (qa >= 0 or qb >= 0) else -1
                qb = qa

            old_l1 = l1
            old_linf = linf
            if qa >= 0:
                if qa == qb:
                    touched = 1
                else:
                    touched = 2
                for w in range(touched):
                    if w == 0:
                        q = qa
                        dv_old = d1_old
                    else:
                        q = qb
                        dv_old = d2_old
                    dv_new = la[r, q] - lb[r, q]
                    av_old = dv_old if dv_old >= 0 else -dv_old
                    av_new = dv_new if dv_new >= 0 else -dv_new
                    if av_new >= hist_cap:
                        return OVERFLOW
                    if av_old != av_new:
                        diff_hist[av_old] -= 1
                        diff_hist[av_new] += 1
                        l1 += av_new - av_old
                        if av_new > linf:
                            linf = av_new
                        elif av_old == linf and diff_hist[av_old] == 0:
                            while linf > 0 and diff_hist[linf] == 0:
                                linf -= 1
                    if (dv_new > 0) != (dv_old > 0):
                        nbad += np.int64(1) if dv_new > 0 else np.int64(-1)

            if l1 > old_l1:
                viol[V_L1] += 1
            if linf > old_linf:
                viol[V_LINF] += 1
            if check_order[r] != 0 and nbad > 0:
                viol[V_ORDER] += 1
            if check_adj[r] != 0 and l1 > 1:
                viol[V_ADJ] += 1

            if l1 == 0 and coalesce_t[r] < 0:
                coalesce_t[r] = s + 1
                if stop_on_coalesce:
                    break
    return OK
