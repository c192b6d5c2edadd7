"""Moment-matching calibration: coefficients from target statistics.

Exact Newton fitting on enumerable state spaces, and Robbins-Monro
stochastic approximation at simulation scale using the small-time-step
chain (whose stationary law is exactly the ergm) as the sampler.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .infchain import AcceptanceOverflow, RChain, RSpec
from .mc import batch_means_stderr
from .net import Network
from .stats import Model, stat
from .transforms import logit

__all__ = [
    "NonConvergence",
    "CalibrationResult",
    "calibrate_exact",
    "calibrate_stochastic",
    "edges_only_theta",
]


class NonConvergence(RuntimeError):
    """Calibration failed to reach its targets within budget."""

    def __init__(self, message, trace=None, residual=None):
        super().__init__(message)
        self.trace = trace or []
        self.residual = residual


@dataclass
class CalibrationResult:
    """Fitted coefficients plus the confirmation-run evidence."""

    theta: np.ndarray
    targets: np.ndarray
    achieved: np.ndarray
    stderr: np.ndarray
    n_steps: int
    seed: object
    trace: list = field(default_factory=list)


def edges_only_theta(target_edges, n_dyads):
    """Closed form for an edges-only model: logit(target / dyad count)."""
    if not 0.0 < target_edges < n_dyads:
        raise ValueError("edges target must lie strictly inside (0, N_dyads)")
    return logit(target_edges / n_dyads)


def calibrate_exact(space, terms, targets, theta0=None, tol=1e-8, max_iter=200):
    """Newton moment matching on an enumerated state space.

    Solves E_theta[g] = targets for the distribution exp(theta . g)/C over
    the space's valid states, using the exact covariance matrix of g as the
    Jacobian, with step halving when the residual fails to shrink.
    """
    terms = list(terms)
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (len(terms),):
        raise ValueError("need one target per term")
    G = np.array(
        [[stat(t, space.network(s)) for t in terms] for s in range(space.size)]
    )
    lo, hi = G.min(axis=0), G.max(axis=0)
    if np.any(targets <= lo) or np.any(targets >= hi):
        raise NonConvergence(
            f"targets {targets.tolist()} outside the open statistic range "
            f"[{lo.tolist()}, {hi.tolist()}]"
        )
    theta = (
        np.zeros(len(terms)) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    )

    def moments(th):
        pot = G @ th
        pot -= pot.max()
        pi = np.exp(pot)
        pi /= pi.sum()
        mean = pi @ G
        cov = (G * pi[:, None]).T @ G - np.outer(mean, mean)
        return mean, cov

    mean, cov = moments(theta)
    gap = targets - mean
    for _ in range(max_iter):
        if np.abs(gap).max() <= tol:
            return theta
        step = np.linalg.solve(cov + 1e-12 * np.eye(len(terms)), gap)
        # step halving keeps Newton inside the well-behaved region
        scale = 1.0
        for _ in range(60):
            cand = theta + scale * step
            mean, cov_c = moments(cand)
            new_gap = targets - mean
            if np.abs(new_gap).max() < np.abs(gap).max():
                theta, gap, cov = cand, new_gap, cov_c
                break
            scale *= 0.5
        else:
            raise NonConvergence(
                "Newton stalled", residual=float(np.abs(gap).max())
            )
    if np.abs(gap).max() <= tol:
        return theta
    raise NonConvergence(
        f"no convergence in {max_iter} iterations",
        residual=float(np.abs(gap).max()),
    )


def _sampler(model, net, lam, seed):
    spec = RSpec(model, duration_base=(1.0,), lam=lam, proposal="random_toggle")
    return RChain(spec, net, seed=seed)


def _run_batch(chain, model, net_holder, lam_holder, n_steps, thin, seed_holder):
    """One chain batch with automatic lambda escalation on overflow.

    Raising lambda slows mixing but leaves the stationary law untouched, so
    escalation is always safe; the chain restarts from its current network.
    """
    while True:
        try:
            rows, _ = chain.run(n_steps, thin=thin)
            return chain, rows
        except AcceptanceOverflow:
            lam_holder[0] *= 2.0
            seed_holder[0] += 1
            net_holder[0] = chain.network()
            chain = _sampler(model, net_holder[0], lam_holder[0], seed_holder[0])


def calibrate_stochastic(
    terms,
    targets,
    net_size,
    budget=2_000_000,
    seed=0,
    tol=0.02,
    theta0=None,
    safety=2.0,
):
    """Robbins-Monro moment matching driven by the small-time-step sampler.

    Iterates theta <- theta + a_t * (targets - batch mean of g), with per-term
    gains a_0 set from a pilot run's statistic variances and decay
    a_t = a_0 / (1 + t/tau), tau = budget/10 steps.  A confirmation run at
    the final theta must match every target within max(tol * |target|,
    3 * batch-means stderr); otherwise NonConvergence with the gap trace.
    """
    terms = list(terms)
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (len(terms),):
        raise ValueError("need one target per term")
    min_budget = 50_000
    if budget < min_budget:
        raise ValueError(f"budget must be at least {min_budget}")
    n_dyads = net_size * (net_size - 1) // 2
    theta = np.zeros(len(terms)) if theta0 is None else np.asarray(theta0, float).copy()
    if theta0 is None:
        for q, t in enumerate(terms):
            if t.kind == "edges":
                theta[q] = edges_only_theta(
                    min(max(targets[q], 0.5), n_dyads - 0.5), n_dyads
                )
    rng = np.random.default_rng(seed)
    model = Model(terms, theta.copy())
    lam_holder = [safety * n_dyads]
    # start near the target density to cut warm-up bias
    p0 = 0.0
    for q, t in enumerate(terms):
        if t.kind == "edges":
            p0 = min(0.9, max(targets[q], 1.0) / n_dyads)
    init = Network(net_size)
    if p0 > 0.0:
        from .tergm import bernoulli_network

        init = bernoulli_network(net_size, p0, rng)
    net_holder = [init]
    seed_holder = [int(rng.integers(2**63))]
    chain = _sampler(model, net_holder[0], lam_holder[0], seed_holder[0])

    pilot = max(min_budget // 5, budget // 10)
    chain, rows = _run_batch(chain, model, net_holder, lam_holder, pilot, 1, seed_holder)
    var = rows.var(axis=0)
    a0 = 1.0 / np.maximum(var, 1e-3)
    tau = budget / 10.0

    batch = max(1000, budget // 400)
    n_batches = max(1, (budget - pilot - budget // 5) // batch)
    trace = []
    used = pilot
    tail = []  # iterate averaging over the second half stabilizes the estimate
    for b in range(n_batches):
        chain, rows = _run_batch(
            chain, model, net_holder, lam_holder, batch, 1, seed_holder
        )
        used += batch
        gap = targets - rows.mean(axis=0)
        a_t = a0 / (1.0 + used / tau)
        theta += a_t * gap
        chain.M.theta[: len(terms)] = theta
        model = Model(terms, theta.copy())
        trace.append((used, gap.copy()))
        if b >= n_batches // 2:
            tail.append(theta.copy())
    if tail:
        theta = np.mean(tail, axis=0)
        chain.M.theta[: len(terms)] = theta
        model = Model(terms, theta.copy())

    conf = budget - used
    chain, rows = _run_batch(chain, model, net_holder, lam_holder, conf, 1, seed_holder)
    achieved = rows.mean(axis=0)
    # batches must span several relaxation times (~lambda steps) to give an
    # honest standard error
    n_b = int(min(32, max(4, conf // max(1, int(4 * lam_holder[0])))))
    se = np.atleast_1d(batch_means_stderr(rows, n_b))
    gap = np.abs(achieved - targets)
    allowed = np.maximum(tol * np.abs(targets), 3.0 * se)
    if np.any(gap > allowed):
        worst = int(np.argmax(gap - allowed))
        raise NonConvergence(
            f"term {terms[worst]} missed its target: achieved "
            f"{achieved[worst]:.4g} vs {targets[worst]:.4g} "
            f"(gap {gap[worst]:.3g} > allowed {allowed[worst]:.3g})",
            trace=trace,
            residual=float(gap[worst]),
        )
    return CalibrationResult(
        theta=theta,
        targets=targets,
        achieved=achieved,
        stderr=se,
        n_steps=budget,
        seed=seed,
        trace=trace,
    )
