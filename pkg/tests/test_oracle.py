"""Exact enumeration oracle: state spaces, matrices, and asymptotics."""

import math

import numpy as np
import pytest

from eda_lab.net import Constraint, DurationSpec, Network, dyad_index
from eda_lab.oracle import (
    NormalizationFailure,
    build_R,
    build_T,
    enumerate_states,
    exact_expectations,
    exact_pi,
    mean_edge_duration_exact,
    stationary,
)
from eda_lab.stats import Model, Term
from eda_lab.transforms import inv_logit


def test_three_node_unconstrained_hypercube():
    sp = enumerate_states(3)
    assert sp.size == 8
    assert sp.connected


def test_three_node_max_degree_one():
    sp = enumerate_states(3, Constraint.max_degree(1))
    assert sp.size == 4  # empty plus three single edges
    assert sp.connected
    assert 0 in sp.states


def test_node_cap_enforced():
    with pytest.raises(ValueError):
        enumerate_states(7)


def test_exact_pi_uniform_at_zero():
    sp = enumerate_states(3)
    model = Model([Term("edges")], np.array([0.0]))
    assert np.allclose(exact_pi(sp, model), 1.0 / 8.0, atol=1e-15)


def test_exact_pi_marginal_is_inverse_logit():
    theta = -0.7
    sp = enumerate_states(4)
    model = Model([Term("edges")], np.array([theta]))
    mean_edges = exact_expectations(sp, model, [Term("edges")])[0]
    assert mean_edges == pytest.approx(6 * inv_logit(theta), abs=1e-12)


def test_exact_pi_positive_and_normalized_with_gwesp():
    sp = enumerate_states(4)
    model = Model([Term("edges"), Term("gwesp", alpha=0.5)], np.array([-1.0, 0.5]))
    pi = exact_pi(sp, model)
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(pi > 0)
    assert sp.size == 64


def test_build_R_rows_and_stationary():
    sp = enumerate_states(3)
    model = Model([Term("edges")], np.array([-0.5]))
    dur = DurationSpec((4.0,), 2.0)
    R = build_R(sp, model, dur)
    assert np.allclose(R.sum(axis=1), 1.0, atol=1e-12)
    assert R.min() >= 0.0
    assert np.allclose(stationary(R), exact_pi(sp, model), atol=1e-12)


def test_build_R_normalization_failure_reports_sufficient_lambda():
    sp = enumerate_states(4)
    model = Model([Term("edges")], np.array([0.5]))
    dur = DurationSpec((1.0,), 1.0)  # far too small a time scale
    with pytest.raises(NormalizationFailure) as exc:
        build_R(sp, model, dur)
    lam_min = exc.value.lam_min
    # the reported lambda is indeed sufficient for the offending state
    build_R(sp, model, DurationSpec((1.0,), lam_min * 1.001))


def test_build_T_rows_and_variants_differ():
    sp = enumerate_states(3)
    model = Model([Term("edges")], np.array([-0.5]))
    dur = DurationSpec((3.0,), 4.0)
    T_old = build_T(sp, model, dur, "old")
    T_new = build_T(sp, model, dur, "new")
    for T in (T_old, T_new):
        assert np.allclose(T.sum(axis=1), 1.0, atol=1e-12)
        assert T.min() >= 0.0
    assert np.abs(T_old - T_new).max() > 1e-4
    with pytest.raises(ValueError):
        build_T(sp, model, dur, "exact")
    with pytest.raises(ValueError):
        build_T(sp, model, DurationSpec((1.0,), 1.0), "old")  # needs D > 1


def test_single_dyad_T_matches_two_state_closed_form():
    sp = enumerate_states(2)
    theta, d0, lam = -0.4, 2.0, 5.0
    model = Model([Term("edges")], np.array([theta]))
    dur = DurationSpec((d0,), lam)
    d = d0 * lam
    T = build_T(sp, model, dur, "old")
    # state 1 -> 0: the dissolution factor normalizes to exactly 1/D
    assert T[1, 0] == pytest.approx(1.0 / d, abs=1e-15)
    # state 0 -> 1: exp(theta)/(D-1) normalized
    w = math.exp(theta) / (d - 1.0)
    assert T[0, 1] == pytest.approx(w / (1.0 + w), abs=1e-15)


def test_mean_edge_duration_exact_under_R():
    sp = enumerate_states(3)
    model = Model([Term("edges"), Term("degree", 1)], np.array([-0.3, 0.4]))
    dur = DurationSpec((3.0,), 6.0)
    R = build_R(sp, model, dur)
    for dyad in [(0, 1), (0, 2), (1, 2)]:
        assert mean_edge_duration_exact(R, sp, dyad) == pytest.approx(
            18.0, abs=1e-9
        )


def test_mean_edge_duration_exact_under_T():
    # the per-edge dissolution factor cancels to exactly 1/D in every state
    sp = enumerate_states(3)
    model = Model([Term("edges"), Term("gwesp", alpha=0.5)], np.array([-1.0, 0.5]))
    dur = DurationSpec((4.0,), 8.0)
    for variant in ("old", "new"):
        T = build_T(sp, model, dur, variant)
        assert mean_edge_duration_exact(T, sp, (0, 1)) == pytest.approx(
            32.0, rel=1e-8
        )


def test_stationary_requires_stochastic_matrix():
    bad = np.array([[0.5, 0.2], [0.1, 0.9]])  # rows don't sum to one
    with pytest.raises(Exception):
        stationary(bad)
