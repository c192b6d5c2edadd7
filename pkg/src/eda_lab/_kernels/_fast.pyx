# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernels.

Mirrors ``_pure.py`` operation for operation: same branch structure, same
floating-point evaluation order, same random-number consumption.  Outputs are
bit-identical to the pure backend.
"""

from libc.math cimport INFINITY, exp, pow

KIND_EDGES = 0
KIND_DEGREE = 1
KIND_GWESP = 2
KIND_NODEMATCH = 3

PROP_RANDOM_TOGGLE = 0
PROP_TNT = 1

R_CHUNK = 16384

cdef long _KIND_EDGES = 0
cdef long _KIND_DEGREE = 1
cdef long _KIND_GWESP = 2
cdef long _KIND_NODEMATCH = 3
cdef long _CONS_MAX_DEGREE = 1
cdef long _CONS_MIN_DEGREE = 2
cdef long _R_CHUNK = 16384


cdef class _CS:
    cdef unsigned char[:, ::1] adj
    cdef long[::1] deg
    cdef long[::1] dyad_i
    cdef long[::1] dyad_j
    cdef long[::1] type_of
    cdef long[::1] edge_list
    cdef long[::1] edge_pos
    cdef long[::1] nonedge_list
    cdef long[::1] nonedge_pos
    cdef long[::1] added_list
    cdef long[::1] added_pos
    cdef long[::1] formation_step
    cdef long[::1] counts
    cdef double[::1] stat_vec
    cdef long n, N, cons_kind, cons_bound
    cdef bint track_mask

    def __init__(self, S):
        self.adj = S.adj
        self.deg = S.deg
        self.dyad_i = S.dyad_i
        self.dyad_j = S.dyad_j
        self.type_of = S.type_of
        self.edge_list = S.edge_list
        self.edge_pos = S.edge_pos
        self.nonedge_list = S.nonedge_list
        self.nonedge_pos = S.nonedge_pos
        self.added_list = S.added_list
        self.added_pos = S.added_pos
        self.formation_step = S.formation_step
        self.counts = S.counts
        self.stat_vec = S.stat_vec
        self.n = S.n
        self.N = S.N
        self.cons_kind = S.cons_kind
        self.cons_bound = S.cons_bound
        self.track_mask = S.track_mask


cdef class _CM:
    cdef long[::1] kinds
    cdef long[::1] kparam
    cdef double[::1] ea
    cdef double[::1] eminus
    cdef double[::1] decay
    cdef double[::1] theta
    cdef double[::1] dstat
    cdef long[:, ::1] labels
    cdef long n_terms

    def __init__(self, M):
        self.kinds = M.kinds
        self.kparam = M.kparam
        self.ea = M.ea
        self.eminus = M.eminus
        self.decay = M.decay
        self.theta = M.theta
        self.dstat = M.dstat
        self.labels = M.labels
        self.n_terms = M.n_terms


cdef inline double _exp_guard(double x):
    if x > 709.0:
        return INFINITY
    if x < -745.0:
        return 0.0
    return exp(x)


cdef double _logodds(_CS s, _CM m, long d, int present):
    cdef long i = s.dyad_i[d]
    cdef long j = s.dyad_j[d]
    cdef long n = s.n
    cdef long t, kind, k, di, dj, row, cn, u, v, s_iu, s_ju
    cdef double lr = 0.0
    cdef double dd, decay, eminus, acc, th
    if present:
        s.adj[i, j] = 0
        s.adj[j, i] = 0
    for t in range(m.n_terms):
        kind = m.kinds[t]
        if kind == _KIND_EDGES:
            dd = 1.0
        elif kind == _KIND_DEGREE:
            k = m.kparam[t]
            di = s.deg[i] - present
            dj = s.deg[j] - present
            dd = <double>(
                (di + 1 == k) - (di == k) + (dj + 1 == k) - (dj == k)
            )
        elif kind == _KIND_NODEMATCH:
            row = m.kparam[t]
            dd = 1.0 if m.labels[row, i] == m.labels[row, j] else 0.0
        else:
            decay = m.decay[t]
            eminus = m.eminus[t]
            cn = 0
            acc = 0.0
            for u in range(n):
                if s.adj[i, u] and s.adj[j, u]:
                    cn += 1
                    s_iu = 0
                    s_ju = 0
                    for v in range(n):
                        if s.adj[u, v]:
                            if s.adj[i, v]:
                                s_iu += 1
                            if s.adj[j, v]:
                                s_ju += 1
                    acc += (pow(decay, s_iu) + pow(decay, s_ju)) * eminus
            acc += 1.0 - pow(decay, cn)
            dd = m.ea[t] * acc
        m.dstat[t] = dd
        th = m.theta[t]
        if th != 0.0 and dd != 0.0:
            lr += th * dd
    if present:
        s.adj[i, j] = 1
        s.adj[j, i] = 1
    return lr


cdef void _toggle_on(_CS s, long d, long step):
    cdef long i = s.dyad_i[d]
    cdef long j = s.dyad_j[d]
    cdef long m, p, nm, last
    s.adj[i, j] = 1
    s.adj[j, i] = 1
    s.deg[i] += 1
    s.deg[j] += 1
    m = s.counts[0]
    s.edge_list[m] = d
    s.edge_pos[d] = m
    s.counts[0] = m + 1
    p = s.nonedge_pos[d]
    nm = s.counts[1]
    last = s.nonedge_list[nm - 1]
    s.nonedge_list[p] = last
    s.nonedge_pos[last] = p
    s.nonedge_pos[d] = -1
    s.counts[1] = nm - 1
    s.formation_step[d] = step
    if s.track_mask:
        s.counts[3] |= (<long>1) << d


cdef void _toggle_off(_CS s, long d):
    cdef long i = s.dyad_i[d]
    cdef long j = s.dyad_j[d]
    cdef long p, m, nm, last
    s.adj[i, j] = 0
    s.adj[j, i] = 0
    s.deg[i] -= 1
    s.deg[j] -= 1
    p = s.edge_pos[d]
    m = s.counts[0]
    last = s.edge_list[m - 1]
    s.edge_list[p] = last
    s.edge_pos[last] = p
    s.edge_pos[d] = -1
    s.counts[0] = m - 1
    nm = s.counts[1]
    s.nonedge_list[nm] = d
    s.nonedge_pos[d] = nm
    s.counts[1] = nm + 1
    s.formation_step[d] = -1
    if s.track_mask:
        s.counts[3] &= ~((<long>1) << d)


cdef inline bint _on_toggle_valid(_CS s, long i, long j):
    cdef long b
    if s.cons_kind == _CONS_MAX_DEGREE:
        b = s.cons_bound
        return s.deg[i] + 1 <= b and s.deg[j] + 1 <= b
    return True


cdef inline bint _off_toggle_valid(_CS s, long i, long j):
    cdef long b
    if s.cons_kind == _CONS_MIN_DEGREE:
        b = s.cons_bound
        return s.deg[i] - 1 >= b and s.deg[j] - 1 >= b
    return True


cdef void _formation_phase(_CS s, _CM m, long n_props, long step, double[::1] u):
    cdef long t, nm, na, idx, d, i, j, x, q
    cdef double u1, u2, lr, ratio
    for t in range(n_props):
        u1 = u[2 * t]
        u2 = u[2 * t + 1]
        if u1 < 0.5:
            nm = s.counts[1]
            if nm == 0:
                continue
            idx = <long>(u1 * 2.0 * nm)
            if idx >= nm:
                idx = nm - 1
            d = s.nonedge_list[idx]
            i = s.dyad_i[d]
            j = s.dyad_j[d]
            if not _on_toggle_valid(s, i, j):
                continue
            lr = _logodds(s, m, d, 0)
            na = s.counts[2]
            ratio = _exp_guard(lr) * nm / (na + 1.0)
            if u2 < ratio:
                _toggle_on(s, d, step)
                s.added_list[na] = d
                s.added_pos[d] = na
                s.counts[2] = na + 1
                for q in range(m.n_terms):
                    s.stat_vec[q] += m.dstat[q]
        else:
            na = s.counts[2]
            if na == 0:
                continue
            idx = <long>((u1 - 0.5) * 2.0 * na)
            if idx >= na:
                idx = na - 1
            d = s.added_list[idx]
            i = s.dyad_i[d]
            j = s.dyad_j[d]
            if not _off_toggle_valid(s, i, j):
                continue
            lr = _logodds(s, m, d, 1)
            nm = s.counts[1]
            ratio = _exp_guard(-lr) * na / (nm + 1.0)
            if u2 < ratio:
                _toggle_off(s, d)
                idx = s.added_pos[d]
                d = s.added_list[na - 1]
                s.added_list[idx] = d
                s.added_pos[d] = idx
                s.counts[2] = na - 1
                for q in range(m.n_terms):
                    s.stat_vec[q] -= m.dstat[q]
    na = s.counts[2]
    for x in range(na):
        s.added_pos[s.added_list[x]] = -1
    s.counts[2] = 0


cdef long _dissolution_phase(
    _CS s,
    _CM m,
    double[::1] dissolve_prob,
    long step,
    long[::1] sp_type,
    long[::1] sp_age,
    long sp_count,
    double[::1] u,
    long m0,
):
    cdef long idx, d, q
    cdef double uu
    for idx in range(m0 - 1, -1, -1):
        d = s.edge_list[idx]
        uu = u[m0 - 1 - idx]
        if s.formation_step[d] == step:
            continue
        if uu < dissolve_prob[s.type_of[d]]:
            _logodds(s, m, d, 1)
            sp_type[sp_count] = s.type_of[d]
            sp_age[sp_count] = step - s.formation_step[d]
            sp_count += 1
            _toggle_off(s, d)
            for q in range(m.n_terms):
                s.stat_vec[q] -= m.dstat[q]
    return sp_count


def formation_phase(S, M, n_props, step, rng):
    cdef _CS s = _CS(S)
    cdef _CM m = _CM(M)
    cdef double[::1] u = rng.random(2 * n_props)
    _formation_phase(s, m, n_props, step, u)


def dissolution_phase(S, M, dissolve_prob, step, sp_type, sp_age, sp_count, rng):
    cdef _CS s = _CS(S)
    cdef _CM m = _CM(M)
    cdef long m0 = s.counts[0]
    if m0 == 0:
        return sp_count
    cdef double[::1] u = rng.random(m0)
    return _dissolution_phase(
        s, m, dissolve_prob, step, sp_type, sp_age, sp_count, u, m0
    )


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
    cdef _CS s = _CS(S)
    cdef _CM m = _CM(M)
    cdef double[::1] dprob = dissolve_prob
    cdef double[:, ::1] stats = stats_out
    cdef long[::1] sptype = sp_type
    cdef long[::1] spage = sp_age
    cdef long spc = sp_count
    cdef long cap = sptype.shape[0]
    cdef long nprops = n_props
    cdef long nsteps = n_steps
    cdef long s0 = step0
    cdef long burn = burn_in
    cdef long steps_done = 0
    cdef long si, step, row, q, m0
    cdef double[::1] u
    for si in range(nsteps):
        step = s0 + si
        if spc + s.counts[0] > cap:
            break
        u = rng.random(2 * nprops)
        _formation_phase(s, m, nprops, step, u)
        m0 = s.counts[0]
        if m0 > 0:
            u = rng.random(m0)
            spc = _dissolution_phase(
                s, m, dprob, step, sptype, spage, spc, u, m0
            )
        if step >= burn:
            row = step - burn
            for q in range(m.n_terms):
                stats[row, q] = s.stat_vec[q]
        steps_done += 1
    return steps_done, spc


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
    cdef _CS s = _CS(S)
    cdef _CM m = _CM(M)
    cdef double[::1] invd = inv_d
    cdef double[:, ::1] stats = stats_out
    cdef long[::1] masks = mask_out
    cdef bint recmask = record_mask
    cdef long[::1] sptype = sp_type
    cdef long[::1] spage = sp_age
    cdef long spc = sp_count
    cdef long cap = sptype.shape[0]
    cdef long kind = prop_kind
    cdef long ebound = edge_bound
    cdef long nsteps = n_steps
    cdef long s0 = step0
    cdef long th = thin
    cdef long rec = rec_idx
    cdef double macc = max_acc
    cdef long N = s.N
    cdef long steps_done = 0
    cdef long pos = _R_CHUNK
    cdef long d, i, j, idx, mm, nm, step, q, on
    cdef double u1, u2, psel, rate, acc, lr, on_mass, off_mass
    cdef double[::1] u = None
    while steps_done < nsteps:
        if spc >= cap:
            break
        if pos >= _R_CHUNK:
            u = rng.random(2 * _R_CHUNK)
            pos = 0
        u1 = u[2 * pos]
        u2 = u[2 * pos + 1]
        pos += 1
        step = s0 + steps_done
        d = -1
        on = 0
        psel = 1.0
        if kind == 0:  # random toggle
            d = <long>(u1 * N)
            if d >= N:
                d = N - 1
            on = 1 if s.edge_pos[d] < 0 else 0
            psel = 1.0 / N
        else:  # TNT analogue
            mm = s.counts[0]
            nm = s.counts[1]
            on_mass = nm / (2.0 * N)
            off_mass = mm * (0.5 / ebound + 0.5 / N)
            if u1 < on_mass:
                idx = <long>(u1 / on_mass * nm)
                if idx >= nm:
                    idx = nm - 1
                d = s.nonedge_list[idx]
                on = 1
                psel = 0.5 / N
            elif u1 < on_mass + off_mass:
                idx = <long>((u1 - on_mass) / off_mass * mm)
                if idx >= mm:
                    idx = mm - 1
                d = s.edge_list[idx]
                on = 0
                psel = 0.5 / ebound + 0.5 / N
        if d >= 0:
            i = s.dyad_i[d]
            j = s.dyad_j[d]
            rate = 0.0
            if on:
                if (ebound < 0 or s.counts[0] < ebound) and _on_toggle_valid(
                    s, i, j
                ):
                    lr = _logodds(s, m, d, 0)
                    rate = _exp_guard(lr) * invd[s.type_of[d]]
            else:
                if _off_toggle_valid(s, i, j):
                    _logodds(s, m, d, 1)
                    rate = invd[s.type_of[d]]
            if rate > 0.0:
                acc = rate / psel
                if acc > macc:
                    macc = acc
                if acc > 1.0 + 1e-12:
                    return steps_done, rec, spc, macc, d
                if u2 < acc:
                    if on:
                        _toggle_on(s, d, step)
                        for q in range(m.n_terms):
                            s.stat_vec[q] += m.dstat[q]
                    else:
                        sptype[spc] = s.type_of[d]
                        spage[spc] = step - s.formation_step[d]
                        spc += 1
                        _toggle_off(s, d)
                        for q in range(m.n_terms):
                            s.stat_vec[q] -= m.dstat[q]
        if (step + 1) % th == 0:
            for q in range(m.n_terms):
                stats[rec, q] = s.stat_vec[q]
            if recmask:
                masks[rec] = s.counts[3]
            rec += 1
        steps_done += 1
    return steps_done, rec, spc, macc, -1
