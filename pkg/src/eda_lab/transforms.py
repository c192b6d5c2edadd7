"""Closed-form coefficient transforms, two-state chain analysis, and error formulas.

All functions work on a single free dyad's linear predictors.  Extended reals
are first-class: theta_minus = -inf encodes dissolution probability 1 (D = 1),
and theta_plus = +inf encodes formation probability 1 (the consistency
boundary).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "CoefficientPair",
    "ConsistencyViolation",
    "logit",
    "inv_logit",
    "transform_old",
    "transform_new",
    "transform_exact",
    "formation_prob",
    "equilibrium_edge_prob",
    "approx_equilibrium",
    "relative_error",
    "crossover_threshold",
    "new_beats_old",
    "two_state_matrix",
]


class ConsistencyViolation(ValueError):
    """No memoryless stergm matches both the edge probability and the duration."""


@dataclass(frozen=True)
class CoefficientPair:
    """Formation and dissolution linear predictors (theta_plus, theta_minus)."""

    theta_plus: float
    theta_minus: float

    @property
    def formation_prob(self):
        return inv_logit(self.theta_plus)

    @property
    def dissolution_prob(self):
        return 1.0 - inv_logit(self.theta_minus)


def logit(p):
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    return math.log(p / (1.0 - p))


def inv_logit(x):
    if x == -math.inf:
        return 0.0
    if x == math.inf:
        return 1.0
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _check_duration(d):
    if d < 1.0:
        raise ValueError(f"duration must be >= 1, got {d}")


def transform_old(theta, d):
    """(theta - log(D - 1), log(D - 1)): the original dyad-independent recipe."""
    _check_duration(d)
    if d == 1.0:
        return CoefficientPair(math.inf, -math.inf)
    ld1 = math.log(d - 1.0)
    return CoefficientPair(theta - ld1, ld1)


def transform_new(theta, d):
    """(theta - log D, log(D - 1)): the sparse-limit recipe."""
    _check_duration(d)
    tm = math.log(d - 1.0) if d > 1.0 else -math.inf
    return CoefficientPair(theta - math.log(d), tm)


def transform_exact(theta, d):
    """(theta - log(D - exp(theta)), log(D - 1)): exact matching of p and D.

    Requires D - exp(theta) >= 0, i.e. the dyad's odds under the ergm cannot
    exceed its duration; the boundary yields theta_plus = +inf (formation
    probability 1).  Coincides with the old recipe exactly when theta = 0.
    """
    _check_duration(d)
    tm = math.log(d - 1.0) if d > 1.0 else -math.inf
    gap = d - math.exp(theta)
    if gap < 0.0:
        p = inv_logit(theta)
        raise ConsistencyViolation(
            f"q = p/((1-p)D) = {p / ((1.0 - p) * d):.6g} > 1: "
            f"no memoryless stergm matches p={p:.6g}, D={d:g}"
        )
    if gap == 0.0:
        return CoefficientPair(math.inf, tm)
    return CoefficientPair(theta - math.log(gap), tm)


def formation_prob(p, d):
    """q = p / ((1 - p) D), the formation probability matching p and D exactly."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    _check_duration(d)
    q = p / ((1.0 - p) * d)
    if q > 1.0:
        raise ConsistencyViolation(f"q = {q:.6g} > 1 for p={p:g}, D={d:g}")
    return q


def equilibrium_edge_prob(q, d):
    """Stationary edge probability qD / (qD + 1) of the two-state dyad chain."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    _check_duration(d)
    return q * d / (q * d + 1.0)


def two_state_matrix(q, d):
    """Transition matrix [[1-q, q], [1/D, 1-1/D]] over states (off, on)."""
    return [[1.0 - q, q], [1.0 / d, 1.0 - 1.0 / d]]


def _alpha_of(variant):
    if variant == "old":
        return 1.0
    if variant == "new":
        return 0.0
    raise ValueError(f"variant must be 'old' or 'new', got {variant!r}")


def approx_equilibrium(p, d, variant):
    """Equilibrium edge probability actually attained by the given variant.

    p_alpha = p D / (D + p + alpha (p - 1)), with alpha = 1 (old) or 0 (new).
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    _check_duration(d)
    a = _alpha_of(variant)
    return p * d / (d + p + a * (p - 1.0))


def relative_error(p, d, variant):
    """(p_variant - p) / p: (1-2p)/(D+2p-1) for old, -p/(D+p) for new."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    _check_duration(d)
    if _alpha_of(variant) == 1.0:
        return (1.0 - 2.0 * p) / (d + 2.0 * p - 1.0)
    return -p / (d + p)


def crossover_threshold(d):
    """Upper root (2 - 3D + sqrt(4 + 4D + 9D^2)) / 8 of the crossover quadratic.

    Below this edge probability the new variant has the smaller error; the
    function decreases from (sqrt(17) - 1)/8 at D = 1 to 1/3 as D -> inf.
    """
    _check_duration(d)
    return (2.0 - 3.0 * d + math.sqrt(4.0 + 4.0 * d + 9.0 * d * d)) / 8.0


def new_beats_old(p, d):
    """Whether |p_new - p| < |p_old - p|; true iff p < crossover_threshold(D)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    _check_duration(d)
    return p < crossover_threshold(d)
