"""Brute-force exact computation over enumerated small-network state spaces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .net import HOMOGENEOUS, Constraint, Network, all_dyads, is_valid

__all__ = [
    "StateSpace",
    "NormalizationFailure",
    "ReducibilityError",
    "enumerate_states",
    "exact_pi",
    "build_R",
    "build_T",
    "stationary",
    "mean_edge_duration_exact",
    "asymptotic_report",
    "exact_expectations",
]

MAX_NODES = 6


class NormalizationFailure(ValueError):
    """Some diagonal of R would be negative: lambda is too small."""

    def __init__(self, state_mask, outflow, lam, lam_min):
        super().__init__(
            f"state {state_mask:#x} has outflow {outflow:.6g} > 1 at "
            f"lambda={lam:g}; lambda >= {lam_min:.6g} suffices"
        )
        self.state_mask = state_mask
        self.outflow = outflow
        self.lam_min = lam_min


class ReducibilityError(ValueError):
    """Linear-solve and power-iteration stationary vectors disagree."""


@dataclass
class StateSpace:
    """All valid edge-set bitmasks of an n-node network under a constraint."""

    n: int
    constraint: Constraint
    states: list
    index: dict
    connected: bool
    dyads: list = field(default_factory=list)

    @property
    def size(self):
        return len(self.states)

    def network(self, s):
        """Network for state id s (or a raw bitmask via mask=)."""
        return Network.from_edge_mask(self.n, self.states[s])


def enumerate_states(n, constraint=None):
    """Enumerate valid states and check single-toggle connectivity.

    The connectivity report covers the cross-sectional exactness assumption:
    the graph over valid states joined by single-dyad differences must be
    connected.
    """
    if n > MAX_NODES:
        raise ValueError(f"state-space enumeration capped at n = {MAX_NODES}")
    constraint = constraint or Constraint.none()
    dyads = all_dyads(n)
    N = len(dyads)
    states = []
    for mask in range(1 << N):
        net = Network.from_edge_mask(n, mask)
        if is_valid(net, constraint):
            states.append(mask)
    index = {mask: s for s, mask in enumerate(states)}
    # connectivity of the single-toggle adjacency over valid states
    seen = {states[0]}
    frontier = [states[0]]
    while frontier:
        mask = frontier.pop()
        for d in range(N):
            nxt = mask ^ (1 << d)
            if nxt in index and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return StateSpace(
        n=n,
        constraint=constraint,
        states=states,
        index=index,
        connected=len(seen) == len(states),
        dyads=dyads,
    )


def _potentials(space, model):
    return np.array([model.potential(space.network(s)) for s in range(space.size)])


def exact_pi(space, model):
    """The ergm distribution exp(theta . g)/C, normalized over valid states."""
    pot = _potentials(space, model)
    pot -= pot.max()
    w = np.exp(pot)
    return w / w.sum()


def exact_expectations(space, model, terms=None):
    """Exact expectations of the given terms (default: the model's)."""
    from .stats import stat

    pi = exact_pi(space, model)
    terms = terms if terms is not None else model.terms
    g = np.array(
        [[stat(t, space.network(s)) for t in terms] for s in range(space.size)]
    )
    return pi @ g


def _type_and_d(space, dur, typer):
    tvec = typer.type_vector(space.n)
    d = np.asarray(dur.d, dtype=float)
    if len(d) == 1:
        d = np.repeat(d, typer.n_types)
    return tvec, d


def build_R(space, model, dur, typer=HOMOGENEOUS):
    """The exact small-time-step matrix over valid states.

    Off-diagonals: (pi(j)/pi(i))/D_k for on-toggles, 1/D_k for off-toggles,
    zero beyond single-dyad neighbors; diagonals absorb the remainder.
    Raises NormalizationFailure when some diagonal would go negative.
    """
    tvec, d = _type_and_d(space, dur, typer)
    S = space.size
    N = len(space.dyads)
    pot = _potentials(space, model)
    R = np.zeros((S, S))
    for s in range(S):
        mask = space.states[s]
        out = 0.0
        for dy in range(N):
            nxt = mask ^ (1 << dy)
            t = space.index.get(nxt)
            if t is None:
                continue
            d_k = d[tvec[dy]]
            if mask >> dy & 1:  # off-toggle
                rate = 1.0 / d_k
            else:
                rate = math.exp(pot[t] - pot[s]) / d_k
            R[s, t] = rate
            out += rate
        if out > 1.0:
            lam_min = dur.lam * out
            raise NormalizationFailure(mask, out, dur.lam, lam_min)
        R[s, s] = 1.0 - out
    return R


def build_T(space, model, dur, variant="old", typer=HOMOGENEOUS):
    """The true one-step EDA tergm transition matrix over valid states.

    Row i: weight of j is (pi(i u j)/pi(i)) * prod_k f_k^formed * g_k^dissolved
    with g_k = 1/(D_k - 1) and f_k = 1/(D_k - 1) (old) or 1/D_k (new),
    normalized so rows sum to one.  pi is extended to possibly-invalid union
    networks through its unnormalized potential.
    """
    if variant not in ("old", "new"):
        raise ValueError(f"variant must be 'old' or 'new', got {variant!r}")
    tvec, d = _type_and_d(space, dur, typer)
    if np.any(d <= 1.0):
        raise ValueError("build_T requires D_k > 1 for all types")
    S = space.size
    N = len(space.dyads)
    log_form = -np.log(d - 1.0) if variant == "old" else -np.log(d)
    log_diss = -np.log(d - 1.0)
    pot_cache = {}

    def pot_of(mask):
        if mask not in pot_cache:
            pot_cache[mask] = model.potential(Network.from_edge_mask(space.n, mask))
        return pot_cache[mask]

    for s in range(S):
        pot_cache[space.states[s]] = None  # filled below
    pot_valid = _potentials(space, model)
    for s in range(S):
        pot_cache[space.states[s]] = pot_valid[s]

    T = np.zeros((S, S))
    for si in range(S):
        mi = space.states[si]
        logw = np.empty(S)
        for sj in range(S):
            mj = space.states[sj]
            union = mi | mj
            lw = pot_of(union) - pot_of(mi)
            formed = mj & ~mi
            dissolved = mi & ~mj
            dy = 0
            while formed or dissolved:
                bit = 1 << dy
                if formed & bit:
                    lw += log_form[tvec[dy]]
                    formed &= ~bit
                if dissolved & bit:
                    lw += log_diss[tvec[dy]]
                    dissolved &= ~bit
                dy += 1
            logw[sj] = lw
        logw -= logw.max()
        w = np.exp(logw)
        T[si] = w / w.sum()
    return T


def stationary(matrix, tol=1e-12, check_tol=1e-8):
    """Left fixed probability vector of a transition matrix.

    Solved as a linear system with the normalization replacing one row, with
    an explicit residual check; a power-iteration cross-check guards against
    reducible chains.
    """
    M = np.asarray(matrix, dtype=float)
    S = M.shape[0]
    A = M.T - np.eye(S)
    A[-1, :] = 1.0
    b = np.zeros(S)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    residual = np.abs(pi @ M - pi).max()
    if residual > tol:
        raise ArithmeticError(f"stationary solve residual {residual:.3g} > {tol:g}")
    # power-iteration cross-check
    v = np.full(S, 1.0 / S)
    for _ in range(200_000):
        nxt = v @ M
        if np.abs(nxt - v).max() < 1e-13:
            v = nxt
            break
        v = nxt
    if np.abs(v - pi).max() > check_tol:
        raise ReducibilityError(
            f"power iteration disagrees with linear solve by "
            f"{np.abs(v - pi).max():.3g}; chain may be reducible"
        )
    return pi


def mean_edge_duration_exact(matrix, space, dyad, dur=None, typer=HOMOGENEOUS):
    """Expected steps until the given dyad's edge dissolves, at stationarity.

    Absorption analysis over the states containing the edge, entered with
    distribution proportional to stationary inflow.
    """
    from .net import dyad_index

    M = np.asarray(matrix, dtype=float)
    bit = 1 << dyad_index(*dyad)
    inside = [s for s in range(space.size) if space.states[s] & bit]
    outside = [s for s in range(space.size) if not space.states[s] & bit]
    if not inside:
        raise ValueError("dyad is never an edge in this state space")
    idx = {s: a for a, s in enumerate(inside)}
    Q = M[np.ix_(inside, inside)]
    t = np.linalg.solve(np.eye(len(inside)) - Q, np.ones(len(inside)))
    pi = stationary(M)
    w = np.zeros(len(inside))
    for c in outside:
        for s in inside:
            if M[c, s] > 0.0:
                w[idx[s]] += pi[c] * M[c, s]
    if w.sum() <= 0.0:
        raise ValueError("edge is never formed under this chain")
    w /= w.sum()
    return float(w @ t)


def _free_dyads(space):
    """Dyads whose edge state varies across the valid states."""
    N = len(space.dyads)
    free = []
    for dy in range(N):
        bit = 1 << dy
        vals = {bool(m & bit) for m in space.states}
        if len(vals) == 2:
            free.append(dy)
    return free


def asymptotic_report(space, model, duration_base, lam_list, typer=HOMOGENEOUS,
                      variants=("old", "new")):
    """Per-lambda distances between T and R and their stationary laws.

    For each lambda and variant: max|T - R|, total-variation distance from
    stationary(T) to the ergm law, and the worst relative duration error of
    free dyads under T; log-log slopes over lam_list are fitted per variant.
    """
    from .net import DurationSpec

    lam_list = list(lam_list)
    if sorted(lam_list) != lam_list:
        raise ValueError("lam_list must be ascending")
    pi = exact_pi(space, model)
    free = _free_dyads(space)
    rows = []
    for variant in variants:
        for lam in lam_list:
            dur = DurationSpec(duration_base, lam)
            R = build_R(space, model, dur, typer)
            T = build_T(space, model, dur, variant, typer)
            pi_T = stationary(T)
            tv = 0.5 * np.abs(pi_T - pi).sum()
            max_dev = np.abs(T - R).max()
            dur_err = 0.0
            for dy in free:
                i, j = space.dyads[dy]
                d_k = dur.d_of(typer.type_of(i, j))
                mean_dur = mean_edge_duration_exact(T, space, (i, j), dur, typer)
                dur_err = max(dur_err, abs(mean_dur - d_k) / d_k)
            rows.append(
                {
                    "variant": variant,
                    "lambda": lam,
                    "max_T_minus_R": float(max_dev),
                    "tv_distance": float(tv),
                    "max_rel_duration_error": float(dur_err),
                }
            )
    slopes = {}
    logl = np.log(np.array(lam_list, dtype=float))
    for variant in variants:
        sel = [r for r in rows if r["variant"] == variant]
        slopes[variant] = {}
        for key in ("max_T_minus_R", "tv_distance", "max_rel_duration_error"):
            vals = np.array([r[key] for r in sel])
            if np.all(vals > 0):
                slopes[variant][key] = float(np.polyfit(logl, np.log(vals), 1)[0])
            else:
                slopes[variant][key] = float("nan")
    return {"rows": rows, "slopes": slopes}
