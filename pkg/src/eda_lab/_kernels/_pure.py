"""Pure-Python simulation kernels.

Reference implementation of the hot loops; the compiled backend in
``_fast.pyx`` mirrors this file operation for operation (same branch
structure, same floating-point evaluation order, same random-number
consumption) so the two produce bit-identical output.
"""

from __future__ import annotations

import math

from .state import (
    CONS_MAX_DEGREE,
    CONS_MIN_DEGREE,
    KIND_DEGREE,
    KIND_EDGES,
    KIND_GWESP,
    KIND_NODEMATCH,
)

PROP_RANDOM_TOGGLE = 0
PROP_TNT = 1

R_CHUNK = 16384


def _exp_guard(x):
    if x > 709.0:
        return math.inf
    if x < -745.0:
        return 0.0
    return math.exp(x)


def _logodds(S, M, d, present):
    """theta . change-stats for toggling dyad d; fills M.dstat.

    Change stats are evaluated with the dyad's edge treated as absent; when
    ``present`` the adjacency entries are cleared for the duration of the
    gwesp computation.
    """
    adj = S.adj
    deg = S.deg
    i = S.dyad_i[d]
    j = S.dyad_j[d]
    n = S.n
    kinds = M.kinds
    kparam = M.kparam
    theta = M.theta
    dstat = M.dstat
    labels = M.labels
    if present:
        adj[i, j] = 0
        adj[j, i] = 0
    lr = 0.0
    for t in range(M.n_terms):
        kind = kinds[t]
        if kind == KIND_EDGES:
            dd = 1.0
        elif kind == KIND_DEGREE:
            k = int(kparam[t])
            di = int(deg[i]) - present
            dj = int(deg[j]) - present
            dd = float(
                (di + 1 == k) - (di == k) + (dj + 1 == k) - (dj == k)
            )
        elif kind == KIND_NODEMATCH:
            row = kparam[t]
            dd = 1.0 if labels[row, i] == labels[row, j] else 0.0
        else:  # KIND_GWESP
            decay = M.decay[t]
            eminus = M.eminus[t]
            cn = 0
            acc = 0.0
            for u in range(n):
                if adj[i, u] and adj[j, u]:
                    cn += 1
                    s_iu = 0
                    s_ju = 0
                    for v in range(n):
                        if adj[u, v]:
                            if adj[i, v]:
                                s_iu += 1
                            if adj[j, v]:
                                s_ju += 1
                    acc += (decay**s_iu + decay**s_ju) * eminus
            acc += 1.0 - decay**cn
            dd = M.ea[t] * acc
        dstat[t] = dd
        th = theta[t]
        if th != 0.0 and dd != 0.0:
            lr += th * dd
    if present:
        adj[i, j] = 1
        adj[j, i] = 1
    return lr


def _toggle_on(S, d, step):
    i = S.dyad_i[d]
    j = S.dyad_j[d]
    S.adj[i, j] = 1
    S.adj[j, i] = 1
    S.deg[i] += 1
    S.deg[j] += 1
    m = S.counts[0]
    S.edge_list[m] = d
    S.edge_pos[d] = m
    S.counts[0] = m + 1
    p = S.nonedge_pos[d]
    nm = S.counts[1]
    last = S.nonedge_list[nm - 1]
    S.nonedge_list[p] = last
    S.nonedge_pos[last] = p
    S.nonedge_pos[d] = -1
    S.counts[1] = nm - 1
    S.formation_step[d] = step
    if S.track_mask:
        S.counts[3] |= 1 << int(d)


def _toggle_off(S, d):
    i = S.dyad_i[d]
    j = S.dyad_j[d]
    S.adj[i, j] = 0
    S.adj[j, i] = 0
    S.deg[i] -= 1
    S.deg[j] -= 1
    p = S.edge_pos[d]
    m = S.counts[0]
    last = S.edge_list[m - 1]
    S.edge_list[p] = last
    S.edge_pos[last] = p
    S.edge_pos[d] = -1
    S.counts[0] = m - 1
    nm = S.counts[1]
    S.nonedge_list[nm] = d
    S.nonedge_pos[d] = nm
    S.counts[1] = nm + 1
    S.formation_step[d] = -1
    if S.track_mask:
        S.counts[3] &= ~(1 << int(d))


def _on_toggle_valid(S, i, j):
    if S.cons_kind == CONS_MAX_DEGREE:
        b = S.cons_bound
        return S.deg[i] + 1 <= b and S.deg[j] + 1 <= b
    return True


def _off_toggle_valid(S, i, j):
    if S.cons_kind == CONS_MIN_DEGREE:
        b = S.cons_bound
        return S.deg[i] - 1 >= b and S.deg[j] - 1 >= b
    return True


def formation_phase(S, M, n_props, step, rng):
    """One Metropolis-Hastings formation phase of ``n_props`` proposals.

    Proposals mix 50/50 between a uniform currently-empty dyad (on-toggle)
    and a uniform within-phase-added edge (off-toggle); edges present at
    phase start are never touched.  Two uniforms are consumed per proposal.
    """
    u = rng.random(2 * n_props)
    stat_vec = S.stat_vec
    dstat = M.dstat
    nT = M.n_terms
    for t in range(n_props):
        u1 = u[2 * t]
        u2 = u[2 * t + 1]
        if u1 < 0.5:
            nm = S.counts[1]
            if nm == 0:
                continue
            idx = int(u1 * 2.0 * nm)
            if idx >= nm:
                idx = nm - 1
            d = S.nonedge_list[idx]
            i = S.dyad_i[d]
            j = S.dyad_j[d]
            if not _on_toggle_valid(S, i, j):
                continue
            lr = _logodds(S, M, d, 0)
            na = S.counts[2]
            ratio = _exp_guard(lr) * nm / (na + 1.0)
            if u2 < ratio:
                _toggle_on(S, d, step)
                S.added_list[na] = d
                S.added_pos[d] = na
                S.counts[2] = na + 1
                for q in range(nT):
                    stat_vec[q] += dstat[q]
        else:
            na = S.counts[2]
            if na == 0:
                continue
            idx = int((u1 - 0.5) * 2.0 * na)
            if idx >= na:
                idx = na - 1
            d = S.added_list[idx]
            i = S.dyad_i[d]
            j = S.dyad_j[d]
            if not _off_toggle_valid(S, i, j):
                continue
            lr = _logodds(S, M, d, 1)
            nm = S.counts[1]
            ratio = _exp_guard(-lr) * na / (nm + 1.0)
            if u2 < ratio:
                _toggle_off(S, d)
                p = S.added_pos[d]
                last = S.added_list[na - 1]
                S.added_list[p] = last
                S.added_pos[last] = p
                S.added_pos[d] = -1
                S.counts[2] = na - 1
                for q in range(nT):
                    stat_vec[q] -= dstat[q]
    na = S.counts[2]
    for x in range(na):
        S.added_pos[S.added_list[x]] = -1
    S.counts[2] = 0


def dissolution_phase(S, M, dissolve_prob, step, sp_type, sp_age, sp_count, rng):
    """Exact per-edge dissolution: edges present at step start dissolve
    independently with their type's probability.  Consumes one uniform per
    current edge (including same-step formations, which are immune)."""
    m0 = S.counts[0]
    if m0 == 0:
        return sp_count
    u = rng.random(m0)
    stat_vec = S.stat_vec
    dstat = M.dstat
    nT = M.n_terms
    for idx in range(m0 - 1, -1, -1):
        d = S.edge_list[idx]
        uu = u[m0 - 1 - idx]
        if S.formation_step[d] == step:
            continue
        if uu < dissolve_prob[S.type_of[d]]:
            _logodds(S, M, d, 1)
            sp_type[sp_count] = S.type_of[d]
            sp_age[sp_count] = step - S.formation_step[d]
            sp_count += 1
            _toggle_off(S, d)
            for q in range(nT):
                stat_vec[q] -= dstat[q]
    return sp_count


def tergm_run(
    S,
    M,
    n_props,
    dissolve_prob,
    n_steps,
    step0,
    burn_in,
    stats_out,
    sp_type,
    sp_age,
    sp_count,
    rng,
):
    """Run discrete tergm steps (formation then dissolution).

    Stops early when the spell buffer could not absorb a worst-case
    dissolution phase; returns (steps_done, sp_count).
    """
    cap = sp_type.shape[0]
    nT = M.n_terms
    steps_done = 0
    for si in range(n_steps):
        step = step0 + si
        if sp_count + S.counts[0] > cap:
            break
        formation_phase(S, M, n_props, step, rng)
        sp_count = dissolution_phase(
            S, M, dissolve_prob, step, sp_type, sp_age, sp_count, rng
        )
        if step >= burn_in:
            row = step - burn_in
            for q in range(nT):
                stats_out[row, q] = S.stat_vec[q]
        steps_done += 1
    return steps_done, sp_count


def r_run(
    S,
    M,
    inv_d,
    prop_kind,
    edge_bound,
    n_steps,
    step0,
    thin,
    rec_idx,
    stats_out,
    mask_out,
    record_mask,
    sp_type,
    sp_age,
    sp_count,
    max_acc,
    rng,
):
    """Run steps of the small-time-step chain via propose/accept.

    One proposal per step, two uniforms consumed per step.  Returns
    (steps_done, rec_idx, sp_count, max_acc, overflow_dyad): overflow_dyad
    is the offending dyad when an acceptance probability exceeded one
    (lambda or the odds bound was misconfigured), else -1.
    """
    N = S.N
    cap = sp_type.shape[0]
    nT = M.n_terms
    stat_vec = S.stat_vec
    dstat = M.dstat
    steps_done = 0
    pos = R_CHUNK  # force an initial draw
    u = None
    while steps_done < n_steps:
        if sp_count >= cap:
            break
        if pos >= R_CHUNK:
            u = rng.random(2 * R_CHUNK)
            pos = 0
        u1 = u[2 * pos]
        u2 = u[2 * pos + 1]
        pos += 1
        step = step0 + steps_done
        d = -1
        on = 0
        psel = 1.0
        if prop_kind == PROP_RANDOM_TOGGLE:
            d = int(u1 * N)
            if d >= N:
                d = N - 1
            on = 1 if S.edge_pos[d] < 0 else 0
            psel = 1.0 / N
        else:  # PROP_TNT
            m = S.counts[0]
            nm = S.counts[1]
            on_mass = nm / (2.0 * N)
            off_mass = m * (0.5 / edge_bound + 0.5 / N)
            if u1 < on_mass:
                idx = int(u1 / on_mass * nm)
                if idx >= nm:
                    idx = nm - 1
                d = S.nonedge_list[idx]
                on = 1
                psel = 0.5 / N
            elif u1 < on_mass + off_mass:
                idx = int((u1 - on_mass) / off_mass * m)
                if idx >= m:
                    idx = m - 1
                d = S.edge_list[idx]
                on = 0
                psel = 0.5 / edge_bound + 0.5 / N
        if d >= 0:
            i = S.dyad_i[d]
            j = S.dyad_j[d]
            rate = 0.0
            if on:
                if (edge_bound < 0 or S.counts[0] < edge_bound) and _on_toggle_valid(
                    S, i, j
                ):
                    lr = _logodds(S, M, d, 0)
                    rate = _exp_guard(lr) * inv_d[S.type_of[d]]
            else:
                if _off_toggle_valid(S, i, j):
                    _logodds(S, M, d, 1)
                    rate = inv_d[S.type_of[d]]
            if rate > 0.0:
                acc = rate / psel
                if acc > max_acc:
                    max_acc = acc
                if acc > 1.0 + 1e-12:
                    return steps_done, rec_idx, sp_count, max_acc, int(d)
                if u2 < acc:
                    if on:
                        _toggle_on(S, d, step)
                        for q in range(nT):
                            stat_vec[q] += dstat[q]
                    else:
                        sp_type[sp_count] = S.type_of[d]
                        sp_age[sp_count] = step - S.formation_step[d]
                        sp_count += 1
                        _toggle_off(S, d)
                        for q in range(nT):
                            stat_vec[q] -= dstat[q]
        if (step + 1) % thin == 0:
            for q in range(nT):
                stats_out[rec_idx, q] = stat_vec[q]
            if record_mask:
                mask_out[rec_idx] = S.counts[3]
            rec_idx += 1
        steps_done += 1
    return steps_done, rec_idx, sp_count, max_acc, -1
