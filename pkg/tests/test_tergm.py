"""Discrete-time separable simulator: phases, spells, and estimators."""

import math
import warnings

import numpy as np
import pytest

from eda_lab.net import Constraint, DurationSpec, DyadTyper, Network
from eda_lab.stats import Model, Term, stat
from eda_lab.tergm import (
    TergmSpec,
    apply_variant,
    default_proposals_per_phase,
    mean_duration_estimates,
    simulate_tergm,
    step_dissolution,
    step_formation,
)


def _spec(theta=-1.0, d=5.0, n_props=200, terms=None, coefs=None, **kw):
    terms = terms or [Term("edges")]
    coefs = coefs if coefs is not None else [theta]
    return TergmSpec(
        formation_model=Model(terms, np.array(coefs, dtype=float)),
        durations=DurationSpec((d,), 1.0),
        proposals_per_phase=n_props,
        **kw,
    )


def test_default_proposals_floor():
    assert default_proposals_per_phase(10) == 10_000
    assert default_proposals_per_phase(5_000) == 100_000


def test_duration_below_one_rejected():
    with pytest.raises(ValueError):
        _spec(d=0.5)


def test_formation_only_adds_or_removes_phase_edges():
    """Edges present at phase start are frozen during formation."""
    net = Network(6, edges=[(0, 1), (2, 3)])
    spec = _spec(theta=-0.5, n_props=500)
    rng = np.random.default_rng(0)
    out = step_formation(net, spec, rng, time=1)
    assert out.has_edge((0, 1)) and out.has_edge((2, 3))
    # pre-existing formation times survive untouched
    assert out.formation_time[(0, 1)] == net.formation_time[(0, 1)]


def test_dissolution_is_exact_bernoulli_and_spares_new_edges():
    n = 40
    net = Network(n)
    for j in range(1, n):
        net.toggle((0, j), time=0)  # old edges
    net.toggle((1, 2), time=5)  # formed this very step
    spec = _spec(d=2.0)
    rng = np.random.default_rng(1)
    out, spells = step_dissolution(net, spec, rng, time=5)
    assert out.has_edge((1, 2))  # same-step formations are immune
    # survivors of the old edges follow Bernoulli(1 - 1/D)
    old_survivors = sum(1 for j in range(1, n) if out.has_edge((0, j)))
    assert 7 <= old_survivors <= 32  # well within Binomial(39, 0.5) range
    for k, age in spells:
        assert age == 5


def test_spell_age_at_least_one():
    spec = _spec(theta=1.5, d=1.5, n_props=50)
    rec = simulate_tergm(spec, Network(5), burn_in=0, steps=400, seed=4)
    assert rec.completed_spells.shape[1] == 2
    assert rec.completed_spells[:, 1].min() >= 1


def test_monitored_statistics_match_final_recount():
    terms = [Term("edges"), Term("degree", 1)]
    spec = _spec(terms=terms, coefs=[-1.0, 0.2], d=4.0, n_props=300)
    mon = [Term("gwesp", alpha=0.5)]
    rec = simulate_tergm(spec, Network(8), burn_in=5, steps=50, seed=2,
                         monitored=mon)
    assert [str(t) for t in rec.monitored] == ["edges", "degree(1)", "gwesp(0.5)"]
    final = rec.extra["final_network"]
    for q, t in enumerate(rec.monitored):
        assert rec.stat_series[-1, q] == pytest.approx(stat(t, final), abs=1e-9)


def test_stat_series_covers_burn_in_plus_steps():
    spec = _spec(n_props=50)
    rec = simulate_tergm(spec, Network(4), burn_in=7, steps=13, seed=0)
    assert rec.stat_series.shape[0] == 20
    assert rec.post_burn_in().shape[0] == 13


def test_censored_spells_reported():
    spec = _spec(theta=2.0, d=50.0, n_props=100)
    rec = simulate_tergm(spec, Network(5), burn_in=0, steps=30, seed=3)
    assert rec.extra["final_network"].edge_count == rec.censored_spells.shape[0]
    assert np.all(rec.censored_spells[:, 1] >= 0)


def test_initial_constraint_violation_rejected():
    spec = _spec(constraint=Constraint.max_degree(1))
    bad = Network(4, edges=[(0, 1), (0, 2)])
    with pytest.raises(ValueError):
        simulate_tergm(spec, bad, 0, 10)


def test_max_degree_constraint_enforced_throughout():
    spec = _spec(theta=1.0, d=3.0, n_props=400,
                 constraint=Constraint.max_degree(2))
    rec = simulate_tergm(spec, Network(7), burn_in=0, steps=200, seed=5)
    assert max(rec.extra["final_network"].degree) <= 2


def test_heterogeneous_durations_per_type():
    typer = DyadTyper([0, 0, 1, 1, 1, 1])
    spec = TergmSpec(
        formation_model=Model([Term("edges")], np.array([1.0])),
        durations=DurationSpec((3.0, 12.0, 6.0), 1.0),
        proposals_per_phase=300,
        typer=typer,
    )
    rec = simulate_tergm(spec, Network(6), burn_in=100, steps=6000, seed=8)
    est = mean_duration_estimates(rec)
    # types: 0 = within-{0,1}, 1 = across, 2 = within-{2..5}
    assert est[0]["hazard_inverse"] == pytest.approx(3.0, rel=0.25)
    assert est[1]["hazard_inverse"] == pytest.approx(12.0, rel=0.25)
    assert est[2]["hazard_inverse"] == pytest.approx(6.0, rel=0.25)


def test_duration_estimators_and_empty_type_warning():
    spec = _spec(theta=0.5, d=4.0, n_props=200)
    rec = simulate_tergm(spec, Network(6), burn_in=50, steps=3000, seed=9)
    est = mean_duration_estimates(rec)
    assert est[0]["hazard_inverse"] == pytest.approx(4.0, rel=0.1)
    assert est[0]["n_completed"] > 100
    # a type with only censored spells is omitted with a warning
    rec.completed_spells = rec.completed_spells[0:0]
    rec.censored_spells = np.array([[0, 3]])
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        out = mean_duration_estimates(rec)
    assert out == {} and len(w) == 1


def test_apply_variant_adjusts_edges_only():
    model = Model([Term("edges"), Term("degree", 1)], np.array([-1.0, 0.3]))
    d = 10.0
    old = apply_variant(model, d, "old")
    new = apply_variant(model, d, "new")
    assert old.theta[0] == pytest.approx(-1.0 - math.log(9.0))
    assert new.theta[0] == pytest.approx(-1.0 - math.log(10.0))
    assert old.theta[1] == new.theta[1] == 0.3
    with pytest.raises(ValueError):
        apply_variant(model, d, "exact")  # exact needs an edges-only model
    with pytest.raises(ValueError):
        apply_variant(Model([Term("degree", 1)], np.array([0.3])), d, "old")


def test_determinism_given_seed():
    spec = _spec(n_props=100)
    a = simulate_tergm(spec, Network(6), 10, 100, seed=42)
    b = simulate_tergm(spec, Network(6), 10, 100, seed=42)
    assert np.array_equal(a.stat_series, b.stat_series)
    assert np.array_equal(a.completed_spells, b.completed_spells)
