"""Simulator for the small-time-step chain via propose/accept.

Off-diagonal rates are (pi(j)/pi(i))/D_k for on-toggles and 1/D_k for
off-toggles, with D_k = lambda * D0_k.  A proposal P(j|i) dominating the
rates turns the chain into a propose/accept scheme with acceptance
probability rate/P(j|i); two proposals are provided (uniform random toggle
and a tie/no-tie analogue), plus an optional edge-count bound that yields
the restricted chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import (
    PROP_RANDOM_TOGGLE,
    PROP_TNT,
    ChainState,
    CompiledModel,
    kernels,
)
from .net import HOMOGENEOUS, Constraint, DurationSpec, Network, toggle_is_valid
from .stats import Model, conditional_logodds
from .tergm import SimulationRecord

__all__ = [
    "RSpec",
    "AcceptanceOverflow",
    "RChain",
    "r_rate",
    "lambda_min_random_toggle",
    "lambda_tnt_analogue",
    "step_R",
    "simulate_R",
]

_PROP_CODE = {"random_toggle": PROP_RANDOM_TOGGLE, "tnt_analogue": PROP_TNT}


class AcceptanceOverflow(RuntimeError):
    """An acceptance probability exceeded one: lambda or the odds bound is
    misconfigured for the visited states."""


@dataclass
class RSpec:
    """Configuration of the small-time-step chain.

    ``duration_base`` holds D0 per dyad type in natural units; ``lam`` scales
    them to per-step durations D_k = lam * D0_k.  When ``lam`` is None it is
    auto-selected from the proposal's normalization formula (times
    ``safety``).  ``odds_bound`` c must dominate the conditional edge odds
    over the reachable states; violations surface as AcceptanceOverflow.
    """

    model: Model
    duration_base: tuple
    constraint: Constraint = field(default_factory=Constraint.none)
    lam: float | None = None
    odds_bound: float = 1.0
    edge_bound: int | None = None
    proposal: str = "random_toggle"
    typer: object = HOMOGENEOUS
    safety: float = 1.0

    def __post_init__(self):
        self.duration_base = tuple(float(x) for x in np.atleast_1d(self.duration_base))
        if any(x <= 0 for x in self.duration_base):
            raise ValueError("base durations must be positive")
        if len(self.duration_base) not in (1, self.typer.n_types):
            raise ValueError("duration_base must be scalar or one per dyad type")
        if self.proposal not in _PROP_CODE:
            raise ValueError(f"unknown proposal {self.proposal!r}")
        if not 0.0 < self.odds_bound <= 1.0:
            raise ValueError("odds bound must lie in (0, 1]")
        if self.proposal == "tnt_analogue" and self.edge_bound is None:
            raise ValueError("tnt_analogue requires an edge bound")

    def d0_of(self, k):
        d0 = self.duration_base
        return d0[0] if len(d0) == 1 else d0[k]

    def resolve_lambda(self, n_nodes):
        """The realized lambda for an n-node network (auto-selected if unset).

        Heterogeneous durations use the smallest D0 in the normalization
        bound, which is conservative (proposal masses are not rescaled by
        type).
        """
        if self.lam is not None:
            return float(self.lam)
        n_dyads = n_nodes * (n_nodes - 1) // 2
        d0_min = min(self.duration_base)
        if self.proposal == "random_toggle":
            base = lambda_min_random_toggle(n_dyads, d0_min)
        else:
            base = lambda_tnt_analogue(
                n_dyads, self.edge_bound, self.odds_bound, d0_min
            )
        return base * self.safety

    def duration_spec(self, n_nodes):
        return DurationSpec(self.duration_base, self.resolve_lambda(n_nodes))


def lambda_min_random_toggle(n_dyads, d0):
    """lambda with lambda*D0 = dyad count: the uniform-toggle normalization
    (assumes conditional edge odds <= 1)."""
    return n_dyads / d0


def lambda_tnt_analogue(n_dyads, edge_bound, odds_bound, d0):
    """lambda = 2/D0 * max(N*N_E/(N + N_E), c*N) for the tie/no-tie analogue
    (on-toggle mass 1/2N per non-edge, off mass 1/2N_E + 1/2N per edge)."""
    if not 0 < edge_bound:
        raise ValueError("edge bound must be positive")
    if not 0.0 < odds_bound <= 1.0:
        raise ValueError("odds bound must lie in (0, 1]")
    n, ne = float(n_dyads), float(edge_bound)
    return 2.0 / d0 * max(n * ne / (n + ne), odds_bound * n)


def r_rate(spec, net, dyad, lam=None):
    """Off-diagonal rate for the single-toggle neighbor reached via ``dyad``.

    exp(theta . change-stats)/D_k when toggling on, 1/D_k when toggling off,
    0 when the toggled network violates the constraint.
    """
    if lam is None:
        lam = spec.resolve_lambda(net.node_count)
    if not toggle_is_valid(net, dyad, spec.constraint):
        return 0.0
    k = spec.typer.type_of(*dyad)
    d_k = lam * spec.d0_of(k)
    if net.has_edge(dyad):
        return 1.0 / d_k
    lr = conditional_logodds(spec.model, net, dyad)
    return math.exp(lr) / d_k if lr < 709 else math.inf


class RChain:
    """A running chain over one network state; supports incremental stepping."""

    def __init__(self, spec, initial, monitored=None, seed=0):
        self.spec = spec
        self.lam = spec.resolve_lambda(initial.node_count)
        self.n = initial.node_count
        if spec.edge_bound is not None and initial.edge_count > spec.edge_bound:
            raise ValueError("initial network exceeds the edge bound")
        terms = list(spec.model.terms)
        theta = list(spec.model.theta)
        for t in monitored or []:
            if t not in terms:
                terms.append(t)
                theta.append(0.0)
        self.terms = terms
        self.M = CompiledModel(terms, theta, self.n, node_attrs=initial.node_attrs)
        self.S = ChainState(initial, typer=spec.typer, constraint=spec.constraint)
        net = initial.copy()
        self.S.attach_model(self.M, net)
        d0 = np.asarray(spec.duration_base, dtype=float)
        if len(d0) == 1:
            d0 = np.repeat(d0, spec.typer.n_types)
        self.inv_d = 1.0 / (self.lam * d0)
        self.prop_kind = _PROP_CODE[spec.proposal]
        self.edge_bound = -1 if spec.edge_bound is None else int(spec.edge_bound)
        self.rng = np.random.default_rng(seed)
        self.step = 0
        self.max_acc = 0.0
        self.sp_type = np.zeros(4096, dtype=np.int64)
        self.sp_age = np.zeros(4096, dtype=np.int64)
        self.sp_count = 0
        self._nullmask = np.zeros(1, dtype=np.int64)

    def run(self, n_steps, thin=None, record_mask=False):
        """Advance ``n_steps`` steps; returns (stat_rows, mask_rows or None).

        ``thin`` defaults to recording nothing (thin > n_steps).
        """
        if record_mask and not self.S.track_mask:
            raise ValueError("state too large for bitmask recording")
        record = thin is not None
        thin = thin if record else n_steps + self.step + 1
        first = self.step
        n_rec = (first + n_steps) // thin - first // thin if record else 0
        stats_out = np.zeros((max(n_rec, 1), self.M.n_terms), dtype=np.float64)
        mask_out = (
            np.zeros(max(n_rec, 1), dtype=np.int64) if record_mask else self._nullmask
        )
        if record_mask and n_rec:
            mask_out = np.zeros(n_rec, dtype=np.int64)
        rec_idx = 0
        done_total = 0
        while done_total < n_steps:
            if self.sp_count >= len(self.sp_type):
                new_cap = 2 * len(self.sp_type)
                self.sp_type = np.resize(self.sp_type, new_cap)
                self.sp_age = np.resize(self.sp_age, new_cap)
            done, rec_idx, self.sp_count, self.max_acc, overflow = kernels.r_run(
                self.S,
                self.M,
                self.inv_d,
                self.prop_kind,
                self.edge_bound,
                n_steps - done_total,
                self.step,
                thin,
                rec_idx,
                stats_out,
                mask_out,
                record_mask,
                self.sp_type,
                self.sp_age,
                self.sp_count,
                self.max_acc,
                self.rng,
            )
            self.step += done
            done_total += done
            if overflow >= 0:
                i = int(self.S.dyad_i[overflow])
                j = int(self.S.dyad_j[overflow])
                raise AcceptanceOverflow(
                    f"acceptance probability {self.max_acc:.6g} > 1 at dyad "
                    f"({i}, {j}); increase lambda or the odds bound"
                )
        return (stats_out[:rec_idx] if record else None,
                mask_out[:rec_idx] if record_mask else None)

    def completed_spells(self):
        return np.column_stack(
            [self.sp_type[: self.sp_count], self.sp_age[: self.sp_count]]
        )

    def censored_spells(self):
        out = []
        for idx in range(self.S.m):
            d = int(self.S.edge_list[idx])
            out.append((int(self.S.type_of[d]), self.step - int(self.S.formation_step[d])))
        return np.array(out, dtype=np.int64).reshape(-1, 2)

    def network(self):
        return self.S.to_network()


def step_R(spec, net, rng_or_seed=0):
    """One propose/accept step; returns the (possibly unchanged) new network.

    Convenience wrapper over RChain for op-level use; for long runs drive an
    RChain directly.
    """
    seed = rng_or_seed if isinstance(rng_or_seed, (int, np.integer)) else None
    chain = RChain(spec, net, seed=0 if seed is None else seed)
    if seed is None:
        chain.rng = rng_or_seed
    chain.run(1)
    return chain.network()


def simulate_R(spec, initial, steps, monitored=None, seed=0, thin=1, burn_in=0):
    """Iterate the chain for burn_in + steps steps, recording every ``thin``.

    Each step spans 1/lambda natural time units; spell ages are reported in
    steps (divide by lambda for natural units).
    """
    chain = RChain(spec, initial, monitored=monitored, seed=seed)
    if burn_in:
        chain.run(burn_in)
        chain.sp_count = 0  # drop burn-in spells
    stats_rows, _ = chain.run(steps, thin=thin)
    record = SimulationRecord(
        monitored=chain.terms,
        stat_series=stats_rows,
        completed_spells=chain.completed_spells(),
        censored_spells=chain.censored_spells(),
        burn_in=0,
        steps=len(stats_rows),
        seed=seed,
        config={
            "lambda": chain.lam,
            "odds_bound": spec.odds_bound,
            "edge_bound": spec.edge_bound,
            "proposal": spec.proposal,
            "thin": thin,
            "constraint": str(spec.constraint),
        },
    )
    record.extra["lambda"] = chain.lam
    record.extra["max_acceptance"] = chain.max_acc
    record.extra["final_network"] = chain.network()
    return record
