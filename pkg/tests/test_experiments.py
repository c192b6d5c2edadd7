"""Experiment runner: grids, determinism, references, and failure handling."""

import math
import os

import numpy as np
import pytest

from eda_lab.experiments import (
    ExperimentConfig,
    deg1_reference,
    emit_plotdata,
    run_experiment,
)


def _tiny_single_dyad(**kw):
    base = dict(design="single_dyad", prevalence=(0.3,), duration=(8.0,),
                variants=("old", "new"), tergm_steps=20_000, seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(design="mystery")
    with pytest.raises(ValueError):
        ExperimentConfig(variants=())
    with pytest.raises(ValueError):
        ExperimentConfig(variants=("old", "exact"))
    with pytest.raises(ValueError):
        ExperimentConfig(replications=0)


def test_config_dict_roundtrip():
    cfg = ExperimentConfig(design="single_dyad", duration=(5.0,))
    back = ExperimentConfig.from_dict(cfg.to_dict())
    assert back == cfg


def test_deg1_reference_formula():
    n, p = 50, 0.02
    assert deg1_reference(n, p) == pytest.approx(
        n * (n - 1) * p * (1 - p) ** (n - 2)
    )


def test_single_dyad_errors_match_closed_forms():
    out = run_experiment(_tiny_single_dyad(tergm_steps=120_000))
    assert not out["failures"]
    by_variant = {r["variant"]: r for r in out["rows"]}
    for variant in ("old", "new"):
        r = by_variant[variant]
        assert abs(r["rel_error"] - r["predicted_rel_error"]) < 4 * (
            r["stderr"] / r["target"]
        )
    # old overshoots, new undershoots at p = 0.3 < crossover
    assert by_variant["old"]["rel_error"] > 0
    assert by_variant["new"]["rel_error"] < 0


def test_determinism_same_seed_byte_identical_csv(tmp_path):
    cfg = _tiny_single_dyad()
    p1 = os.path.join(tmp_path, "a.csv")
    p2 = os.path.join(tmp_path, "b.csv")
    emit_plotdata(run_experiment(cfg), p1)
    emit_plotdata(run_experiment(cfg), p2)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_emit_plotdata_schema(tmp_path):
    out = run_experiment(_tiny_single_dyad())
    path = os.path.join(tmp_path, "errors.csv")
    emit_plotdata(out, path)
    lines = open(path).read().splitlines()
    assert lines[0] == "design,cell,variant,statistic,rel_error,stderr"
    assert len(lines) == 1 + len(out["rows"])
    with pytest.raises(ValueError):
        emit_plotdata({"rows": []}, path)


def test_failed_cell_flagged_not_fatal():
    cfg = _tiny_single_dyad(prevalence=(1.5, 0.3))  # first cell invalid
    out = run_experiment(cfg)
    assert len(out["failures"]) == 1
    assert "prevalence" in out["failures"][0].message
    # the valid cell still produced rows
    assert any(r["cell"].startswith("duration=8;prevalence=0.3")
               for r in out["rows"])


def test_oracle_suite_slopes():
    cfg = ExperimentConfig(design="oracle_suite", oracle_lambdas=(8.0, 16.0, 32.0))
    out = run_experiment(cfg)
    assert not out["failures"]
    slopes = {
        (r["cell"], r["variant"], r["statistic"]): r["value"] - 1.0
        for r in out["rows"]
        if r["statistic"].startswith("slope_")
    }
    for (cell, variant, statname), v in slopes.items():
        if statname == "slope_max_T_minus_R":
            assert v == pytest.approx(-2.0, abs=0.2)
        if statname == "slope_tv_distance":
            assert v <= -0.85


def test_output_files_written(tmp_path):
    out_dir = os.path.join(tmp_path, "exp")
    run_experiment(_tiny_single_dyad(), out_dir=out_dir)
    assert os.path.exists(os.path.join(out_dir, "errors.csv"))
    assert os.path.exists(os.path.join(out_dir, "summary.json"))


def test_parallel_workers_match_serial(tmp_path):
    cfg = _tiny_single_dyad(prevalence=(0.25, 0.4))
    serial = run_experiment(cfg, workers=1)
    parallel = run_experiment(cfg, workers=2)
    assert serial["rows"] == parallel["rows"]
