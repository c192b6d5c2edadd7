"""Batch experiment runner: sweep grids of calibrated models, simulate each
variant, and emit relative-error tables with Monte Carlo standard errors."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .calibrate import calibrate_stochastic
from .infchain import AcceptanceOverflow, RSpec, simulate_R
from .mc import batch_means_stderr
from .net import DurationSpec, Network
from .stats import Model, Term
from .tergm import (
    TergmSpec,
    apply_variant,
    bernoulli_network,
    default_proposals_per_phase,
    simulate_tergm,
)
from .transforms import logit, relative_error

__all__ = [
    "ExperimentConfig",
    "CellFailure",
    "run_experiment",
    "emit_plotdata",
    "deg1_reference",
]

DESIGNS = ("deg1_sweep", "gwesp_sweep", "single_dyad", "oracle_suite")
REFERENCE_NODES = 1000  # grid targets below are stated at this scale
TERGM_VARIANTS = ("old", "new")


@dataclass
class ExperimentConfig:
    """One experiment design plus its grid and budgets.

    Count-valued targets (degree(1), degree(2), gwesp) are stated at the
    1000-node reference scale and rescaled per node; edge targets follow from
    mean degree, so density adapts to the dyad count.  ``prevalence`` is used
    only by the single_dyad design.
    """

    design: str = "deg1_sweep"
    node_count: int = 100
    mean_degree: tuple = (0.7, 1.0, 1.3, 2.0)
    degree1_target: tuple = (200.0, 300.0, 400.0, 500.0, 600.0)
    degree2_target: float = 350.0
    gwesp_target: tuple = (3.0, 10.0, 30.0, 100.0, 300.0)
    gwesp_decay: float = 0.5
    duration: tuple = (15.0, 50.0, 100.0)
    variants: tuple = ("old", "new", "R")
    prevalence: tuple = (0.2, 0.35, 0.5)
    replications: int = 1
    seed: int = 0
    proposals_multiplier: float = 1.0
    calibration_budget: int = 4_000_000
    tergm_steps: int = 0  # 0 = auto from duration
    r_steps: int = 1_000_000
    oracle_lambdas: tuple = (4.0, 8.0, 16.0, 32.0)

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}; choose from {DESIGNS}")
        if not self.variants:
            raise ValueError("variants must be a nonempty subset of (old, new, R)")
        bad = set(self.variants) - {"old", "new", "R"}
        if bad:
            raise ValueError(f"unknown variants {sorted(bad)}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.node_count < 2:
            raise ValueError("node_count must be >= 2")

    @property
    def scale(self):
        return self.node_count / REFERENCE_NODES

    @classmethod
    def full_scale(cls, **kw):
        kw.setdefault("node_count", REFERENCE_NODES)
        return cls(**kw)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in (
            "mean_degree", "degree1_target", "gwesp_target", "duration",
            "variants", "prevalence", "oracle_lambdas",
        ):
            if key in d and not isinstance(d[key], tuple):
                v = d[key]
                d[key] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
        return cls(**d)


@dataclass
class CellFailure:
    cell: str
    variant: str
    message: str


def deg1_reference(n, p):
    """Expected degree(1) count of an independent-dyad model: the reference
    value a dyad-independent network of density p would produce."""
    return n * (n - 1) * p * (1.0 - p) ** (n - 2)


def _cell_key(params):
    return ";".join(f"{k}={params[k]:g}" for k in sorted(params))


def _row(design, params, variant, statistic, target, value, stderr, predicted=None,
         extra=None):
    rel = (value - target) / target if target not in (0, 0.0) else math.nan
    return {
        "design": design,
        "cell": _cell_key(params),
        "variant": variant,
        "statistic": statistic,
        "target": float(target),
        "value": float(value),
        "rel_error": float(rel),
        "stderr": float(stderr),
        "predicted_rel_error": math.nan if predicted is None else float(predicted),
        **(extra or {}),
    }


def _tergm_lengths(cfg, d):
    steps = cfg.tergm_steps or int(2500 + 20 * d)
    burn = int(8 * d)
    return burn, steps


def _run_tergm_variant(cfg, model, targets, d, variant, seed, double=False):
    n = cfg.node_count
    burn, steps = _tergm_lengths(cfg, d)
    edges_target = targets[0]
    base_props = default_proposals_per_phase(edges_target)
    n_props = int(cfg.proposals_multiplier * base_props) * (2 if double else 1)
    if n == 2:
        n_props = 20 * (2 if double else 1)
        burn, steps = 2_000, (cfg.tergm_steps or 150_000)
    form = apply_variant(model, d, variant)
    spec = TergmSpec(
        formation_model=form,
        durations=DurationSpec((d,), 1.0),
        proposals_per_phase=n_props,
    )
    rng = np.random.default_rng(seed)
    p_init = edges_target / (n * (n - 1) / 2)
    init = bernoulli_network(n, min(0.95, p_init), rng)
    rec = simulate_tergm(spec, init, burn, steps, seed=seed)
    series = rec.post_burn_in()
    means = series.mean(axis=0)
    ses = np.atleast_1d(batch_means_stderr(series))
    return means, ses, n_props


def _run_r_variant(cfg, model, d, seed, safety=2.0):
    n = cfg.node_count
    lam = None
    attempt_seed = seed
    for _ in range(12):
        spec = RSpec(
            model,
            duration_base=(d,),
            lam=lam,
            proposal="random_toggle",
            safety=safety,
        )
        try:
            burn = cfg.r_steps // 5
            rec = simulate_R(
                spec, Network(n), cfg.r_steps, seed=attempt_seed, thin=10,
                burn_in=burn,
            )
            series = rec.stat_series
            means = series.mean(axis=0)
            ses = np.atleast_1d(batch_means_stderr(series))
            return means, ses, rec.extra["lambda"]
        except AcceptanceOverflow:
            lam = spec.resolve_lambda(n) * 2.0
            attempt_seed += 1
    raise AcceptanceOverflow("lambda escalation exhausted")


def _predicted_edges_error(p, d, variant, dyad_independent):
    if not dyad_independent or variant == "R":
        return None
    return relative_error(p, d, variant)


def _deg1_cell(cfg, params, seed):
    n = cfg.node_count
    md, deg1_t, d = params["mean_degree"], params["deg1"], params["duration"]
    edges_t = n * md / 2.0
    p = edges_t / (n * (n - 1) / 2)
    ref = deg1_reference(n, p)
    dyad_independent = abs(deg1_t - ref) / max(ref, 1e-9) < 0.02
    terms = [Term("edges"), Term("degree", 1)]
    targets = np.array([edges_t, deg1_t])
    cal = calibrate_stochastic(
        terms, targets, n, budget=cfg.calibration_budget, seed=seed
    )
    model = Model(terms, cal.theta)
    rows = []
    extra = {"deg1_reference": ref}
    for variant in cfg.variants:
        if variant == "R":
            means, ses, lam = _run_r_variant(cfg, model, d, seed + 1)
            vex = {**extra, "lambda": lam}
            n_props = 0
        else:
            means, ses, n_props = _run_tergm_variant(
                cfg, model, targets, d, variant, seed + 1
            )
            m2, s2, _ = _run_tergm_variant(
                cfg, model, targets, d, variant, seed + 2, double=True
            )
            gap = np.abs(means - m2)
            ok = bool(np.all(gap <= 3.0 * np.sqrt(ses**2 + s2**2) + 1e-9))
            vex = {**extra, "proposals_per_phase": n_props, "double_check_ok": ok}
        for q, t in enumerate(terms):
            pred = (
                _predicted_edges_error(p, d, variant, dyad_independent)
                if t.kind == "edges"
                else None
            )
            rows.append(
                _row(cfg.design, params, variant, str(t), targets[q], means[q],
                     ses[q], pred, vex)
            )
    return rows


def _gwesp_cell(cfg, params, seed):
    n = cfg.node_count
    d, gw_t = params["duration"], params["gwesp"]
    s = cfg.scale
    edges_t = n * 2.0 / 2.0  # mean degree 2.0 per the design
    targets = np.array(
        [edges_t, 200.0 * s, cfg.degree2_target * s, gw_t * s]
    )
    terms = [
        Term("edges"), Term("degree", 1), Term("degree", 2),
        Term("gwesp", alpha=cfg.gwesp_decay),
    ]
    cal = calibrate_stochastic(
        terms, targets, n, budget=cfg.calibration_budget, seed=seed, tol=0.05
    )
    model = Model(terms, cal.theta)
    rows = []
    for variant in cfg.variants:
        if variant == "R":
            means, ses, lam = _run_r_variant(cfg, model, d, seed + 1)
            vex = {"lambda": lam}
        else:
            means, ses, n_props = _run_tergm_variant(
                cfg, model, targets, d, variant, seed + 1
            )
            m2, s2, _ = _run_tergm_variant(
                cfg, model, targets, d, variant, seed + 2, double=True
            )
            gap = np.abs(means - m2)
            ok = bool(np.all(gap <= 3.0 * np.sqrt(ses**2 + s2**2) + 1e-9))
            vex = {"proposals_per_phase": n_props, "double_check_ok": ok}
        for q, t in enumerate(terms):
            rows.append(
                _row(cfg.design, params, variant, str(t), targets[q], means[q],
                     ses[q], None, vex)
            )
    return rows


def _single_dyad_cell(cfg, params, seed):
    p, d = params["prevalence"], params["duration"]
    if not 0.0 < p < 1.0:
        raise ValueError("single_dyad prevalence must lie in (0, 1)")
    model = Model([Term("edges")], np.array([logit(p)]))
    cfg2 = replace(cfg, node_count=2)
    rows = []
    for variant in cfg.variants:
        if variant == "R":
            means, ses, lam = _run_r_variant(cfg2, model, d, seed + 1, safety=10.0)
            vex = {"lambda": lam}
            pred = 0.0
        else:
            means, ses, n_props = _run_tergm_variant(
                cfg2, model, np.array([p]), d, variant, seed + 1
            )
            vex = {"proposals_per_phase": n_props}
            pred = relative_error(p, d, variant)
        rows.append(
            _row(cfg.design, params, variant, "edges", p, means[0], ses[0],
                 pred, vex)
        )
    return rows


def _oracle_cell(cfg, params, seed):
    from .oracle import asymptotic_report, enumerate_states

    n = int(params["nodes"])
    space = enumerate_states(n)
    if params["model"] == 0:
        model = Model([Term("edges")], np.array([-0.5]))
        name = "edges"
    else:
        model = Model(
            [Term("edges"), Term("gwesp", alpha=0.5)], np.array([-1.0, 0.5])
        )
        name = "edges+gwesp"
    variants = tuple(v for v in cfg.variants if v != "R") or TERGM_VARIANTS
    rep = asymptotic_report(
        space, model, (5.0,), list(cfg.oracle_lambdas), variants=variants
    )
    rows = []
    for r in rep["rows"]:
        for key in ("max_T_minus_R", "tv_distance", "max_rel_duration_error"):
            rows.append(
                _row(cfg.design, {**params, "lambda": r["lambda"]}, r["variant"],
                     f"{key}", 1.0, 1.0 + r[key], 0.0, None,
                     {"model_name": name})
            )
    for variant, sl in rep["slopes"].items():
        for key, v in sl.items():
            rows.append(
                _row(cfg.design, params, variant, f"slope_{key}", 1.0,
                     1.0 + (v if math.isfinite(v) else 0.0), 0.0, None,
                     {"model_name": name})
            )
    return rows


def _cells(cfg):
    if cfg.design == "deg1_sweep":
        s = cfg.scale
        return [
            {"mean_degree": md, "deg1": t * s, "duration": d}
            for md in cfg.mean_degree
            for t in cfg.degree1_target
            for d in cfg.duration
        ]
    if cfg.design == "gwesp_sweep":
        return [
            {"gwesp": g, "duration": d}
            for g in cfg.gwesp_target
            for d in cfg.duration
        ]
    if cfg.design == "single_dyad":
        return [
            {"prevalence": p, "duration": d}
            for p in cfg.prevalence
            for d in cfg.duration
        ]
    return [{"nodes": 3, "model": 0}, {"nodes": 3, "model": 1}]


_CELL_FN = {
    "deg1_sweep": _deg1_cell,
    "gwesp_sweep": _gwesp_cell,
    "single_dyad": _single_dyad_cell,
    "oracle_suite": _oracle_cell,
}


def _run_one(args):
    cfg, params, idx = args
    fn = _CELL_FN[cfg.design]
    rows, fails = [], []
    for rep in range(cfg.replications):
        seed = cfg.seed * 1_000_003 + idx * 101 + rep * 7
        try:
            out = fn(cfg, params, seed)
            if cfg.replications > 1:
                for r in out:
                    r["replication"] = rep
            rows.extend(out)
        except Exception as exc:  # cell failures must not abort the sweep
            fails.append(CellFailure(_cell_key(params), "*", f"{type(exc).__name__}: {exc}"))
    return idx, rows, fails


def run_experiment(config, out_dir=None, workers=1):
    """Run every grid cell of the design; returns {rows, failures, config}.

    Cells run independently (in parallel when workers > 1) and merge in grid
    order, so output is deterministic for a given (config, seed).  Failed
    cells are recorded in ``failures`` and do not abort the sweep.
    """
    cells = _cells(config)
    jobs = [(config, params, i) for i, params in enumerate(cells)]
    results = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    rows = [r for _, rs, _ in results for r in rs]
    failures = [f for _, _, fs in results for f in fs]
    out = {
        "rows": rows,
        "failures": failures,
        "config": config.to_dict(),
    }
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        emit_plotdata(out, os.path.join(out_dir, "errors.csv"))
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(
                {
                    "config": out["config"],
                    "n_rows": len(rows),
                    "failures": [asdict(f) for f in failures],
                    "rows": rows,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
    return out


def emit_plotdata(table, path):
    """Long-format CSV of the error table, deterministically ordered."""
    rows = table["rows"]
    if not rows:
        raise ValueError("empty error table")
    ordered = sorted(
        rows, key=lambda r: (r["design"], r["cell"], r["variant"], r["statistic"])
    )
    cols = ["design", "cell", "variant", "statistic", "rel_error", "stderr"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in ordered:
            w.writerow(
                [r["design"], r["cell"], r["variant"], r["statistic"],
                 f"{r['rel_error']:.10g}", f"{r['stderr']:.10g}"]
            )
    return path
