"""Command-line interface: transforms, simulators, oracle, calibration,
and the batch experiment runner."""

from __future__ import annotations

import configparser
import csv
import json
import math
import os
import sys

import click
import numpy as np

from .calibrate import NonConvergence, calibrate_exact, calibrate_stochastic
from .experiments import ExperimentConfig, run_experiment
from .infchain import RSpec, simulate_R
from .mc import batch_means_stderr
from .net import Constraint, DurationSpec, Network
from .stats import Model, parse_term, read_model_file
from .tergm import (
    TergmSpec,
    apply_variant,
    bernoulli_network,
    mean_duration_estimates,
    simulate_tergm,
)
from .transforms import (
    ConsistencyViolation,
    crossover_threshold,
    relative_error,
    transform_exact,
    transform_new,
    transform_old,
)

_TRANSFORMS = {"old": transform_old, "new": transform_new, "exact": transform_exact}

DEFAULT_SIM_CONFIG = """\
[network]
nodes = 100
# edgelist = initial.edges   ; optional starting network file
init_density = 0.0

[model]
# file = model.txt           ; "term=<spec> coef=<real>" lines
terms = edges
coefs = -4.0

[dynamics]
duration = 15
variant = none               ; none|old|new|exact (transform applied to the model)

[run]
steps = 4000
burn_in = 500
proposals_per_phase = 0      ; 0 = auto (20x edges, min 10^4)
constraint = none
thin = 1

[r]
proposal = random_toggle     ; random_toggle | tnt_analogue
lambda = 0                   ; 0 = auto from the proposal's normalization
odds_bound = 1.0
edge_bound = 0               ; 0 = none (required for tnt_analogue)
safety = 1.0

[targets]
# edges = 35.0               ; optional; enables relative errors in summary.json
"""

DEFAULT_EXPERIMENT_CONFIG = """\
[experiment]
design = deg1_sweep          ; deg1_sweep | gwesp_sweep | single_dyad | oracle_suite
node_count = 100
mean_degree = 0.7, 1.0, 1.3, 2.0
degree1_target = 200, 300, 400, 500, 600
degree2_target = 350
gwesp_target = 3, 10, 30, 100, 300
gwesp_decay = 0.5
duration = 15, 50, 100
variants = old, new, R
prevalence = 0.2, 0.35, 0.5
replications = 1
seed = 0
proposals_multiplier = 1.0
calibration_budget = 4000000
tergm_steps = 0              ; 0 = auto from duration
r_steps = 1000000
oracle_lambdas = 4, 8, 16, 32
"""


def _split_terms(text):
    """Split a comma-separated term list, respecting parentheses."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            depth += ch == "("
            depth -= ch == ")"
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        out.append(tail)
    return [t for t in out if t]


def _floats(text):
    return [float(x) for x in text.replace(",", " ").split()]


def _read_config(path):
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        cp.read_file(fh)
    return cp


def _read_model_path(path):
    with open(path) as fh:
        return read_model_file(fh.read())


def _model_from_config(cp):
    if cp.has_option("model", "file"):
        return _read_model_path(cp.get("model", "file"))
    terms = [parse_term(t) for t in _split_terms(cp.get("model", "terms"))]
    coefs = _floats(cp.get("model", "coefs"))
    if len(terms) != len(coefs):
        raise click.ClickException("model terms and coefs differ in length")
    return Model(terms, np.array(coefs))


def _initial_network(cp, seed):
    n = cp.getint("network", "nodes")
    if cp.has_option("network", "edgelist"):
        with open(cp.get("network", "edgelist")) as fh:
            return Network.from_edgelist(fh.read())
    dens = cp.getfloat("network", "init_density", fallback=0.0)
    if dens > 0:
        return bernoulli_network(n, dens, np.random.default_rng(seed ^ 0xA5A5))
    return Network(n)


def _write_stats_csv(path, record):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step"] + [str(t) for t in record.monitored])
        for i, row in enumerate(record.stat_series):
            w.writerow([i] + [f"{x:.10g}" for x in row])


def _write_spells_csv(path, record):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["type", "age", "censored"])
        for k, age in record.completed_spells:
            w.writerow([int(k), int(age), 0])
        for k, age in record.censored_spells:
            w.writerow([int(k), int(age), 1])


def _summary(record, targets):
    series = record.post_burn_in()
    means = series.mean(axis=0)
    ses = np.atleast_1d(batch_means_stderr(series))
    out = {"means": {}, "stderr": {}, "relative_errors": {}, "config": record.config}
    for q, t in enumerate(record.monitored):
        name = str(t)
        out["means"][name] = float(means[q])
        out["stderr"][name] = float(ses[q])
        if name in targets and targets[name] != 0:
            out["relative_errors"][name] = float(
                (means[q] - targets[name]) / targets[name]
            )
    out["durations"] = {
        str(k): v for k, v in mean_duration_estimates(record).items()
    }
    return out


def _targets_from_config(cp):
    if not cp.has_section("targets"):
        return {}
    return {str(parse_term(k)): float(v) for k, v in cp.items("targets")}


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Global random seed (subcommand --seed overrides).")
@click.option("--out", type=click.Path(), default=None,
              help="Global output path (subcommand --out overrides).")
@click.option("--workers", type=int, default=1, show_default=True,
              help="Parallel workers for grid designs.")
@click.pass_context
def main(ctx, seed, out, workers):
    """Tools for the edges dissolution approximation of separable temporal
    exponential-family random graph models."""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, out=out, workers=workers)


def _resolve(ctx, seed, out):
    if seed is None:
        seed = ctx.obj.get("seed", 0)
    if out is None:
        out = ctx.obj.get("out")
    return seed, out


@main.command()
@click.option("--theta", type=float, required=True)
@click.option("--duration", type=float, required=True)
@click.option("--variant", type=click.Choice(["old", "new", "exact"]), required=True)
def transform(theta, duration, variant):
    """Print the formation/dissolution coefficients and predicted equilibrium."""
    try:
        pair = _TRANSFORMS[variant](theta, duration)
    except (ConsistencyViolation, ValueError) as exc:
        raise click.ClickException(str(exc))
    q = pair.formation_prob
    eq = q * duration / (q * duration + 1.0) if math.isfinite(q * duration) else 1.0
    click.echo(json.dumps({
        "variant": variant,
        "theta": theta,
        "duration": duration,
        "theta_plus": pair.theta_plus,
        "theta_minus": pair.theta_minus,
        "formation_prob": q,
        "equilibrium_prob": eq,
    }, indent=2))


@main.command("error-table")
@click.option("--duration", type=float, required=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def error_table(ctx, duration, out):
    """CSV of closed-form relative errors over p, plus the crossover point."""
    _, gout = _resolve(ctx, None, out)
    cross = crossover_threshold(duration)
    rows = []
    for i in range(1, 100):
        p = i / 100.0
        rows.append(
            (p, relative_error(p, duration, "old"),
             relative_error(p, duration, "new"), cross)
        )
    target = open(gout, "w", newline="") if gout else sys.stdout
    try:
        w = csv.writer(target)
        w.writerow(["p", "err_old", "err_new", "crossover"])
        for r in rows:
            w.writerow([f"{x:.10g}" for x in r])
    finally:
        if gout:
            target.close()


@main.command("simulate-tergm")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def simulate_tergm_cmd(ctx, config_path, seed, out):
    """Run the discrete-time simulator; writes stats.csv, spells.csv,
    summary.json into --out."""
    seed, out = _resolve(ctx, seed, out)
    if out is None:
        raise click.ClickException("an output directory is required (--out)")
    cp = _read_config(config_path)
    model = _model_from_config(cp)
    d = _floats(cp.get("dynamics", "duration", fallback="15"))
    variant = cp.get("dynamics", "variant", fallback="none").strip()
    if variant != "none":
        if len(d) != 1:
            raise click.ClickException("variant transforms need a single duration")
        model = apply_variant(model, d[0], variant)
    n_props = cp.getint("run", "proposals_per_phase", fallback=0)
    spec = TergmSpec(
        formation_model=model,
        durations=DurationSpec(tuple(d), 1.0),
        constraint=Constraint.parse(cp.get("run", "constraint", fallback="none")),
        proposals_per_phase=n_props or None,
    )
    init = _initial_network(cp, seed)
    rec = simulate_tergm(
        spec, init,
        cp.getint("run", "burn_in", fallback=500),
        cp.getint("run", "steps", fallback=4000),
        seed=seed,
    )
    os.makedirs(out, exist_ok=True)
    _write_stats_csv(os.path.join(out, "stats.csv"), rec)
    _write_spells_csv(os.path.join(out, "spells.csv"), rec)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(_summary(rec, _targets_from_config(cp)), fh, indent=2,
                  sort_keys=True)
    click.echo(f"wrote {out}/stats.csv, spells.csv, summary.json")


@main.command("simulate-r")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def simulate_r_cmd(ctx, config_path, seed, out):
    """Run the small-time-step chain; same outputs plus lambda.json."""
    seed, out = _resolve(ctx, seed, out)
    if out is None:
        raise click.ClickException("an output directory is required (--out)")
    cp = _read_config(config_path)
    model = _model_from_config(cp)
    d = _floats(cp.get("dynamics", "duration", fallback="15"))
    lam = cp.getfloat("r", "lambda", fallback=0.0)
    edge_bound = cp.getint("r", "edge_bound", fallback=0)
    spec = RSpec(
        model,
        duration_base=tuple(d),
        constraint=Constraint.parse(cp.get("run", "constraint", fallback="none")),
        lam=lam or None,
        odds_bound=cp.getfloat("r", "odds_bound", fallback=1.0),
        edge_bound=edge_bound or None,
        proposal=cp.get("r", "proposal", fallback="random_toggle").strip(),
        safety=cp.getfloat("r", "safety", fallback=1.0),
    )
    init = _initial_network(cp, seed)
    rec = simulate_R(
        spec, init,
        cp.getint("run", "steps", fallback=4000),
        seed=seed,
        thin=cp.getint("run", "thin", fallback=1),
        burn_in=cp.getint("run", "burn_in", fallback=500),
    )
    os.makedirs(out, exist_ok=True)
    _write_stats_csv(os.path.join(out, "stats.csv"), rec)
    _write_spells_csv(os.path.join(out, "spells.csv"), rec)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(_summary(rec, _targets_from_config(cp)), fh, indent=2,
                  sort_keys=True)
    with open(os.path.join(out, "lambda.json"), "w") as fh:
        json.dump({
            "lambda": rec.extra["lambda"],
            "odds_bound": spec.odds_bound,
            "edge_bound": spec.edge_bound,
            "max_acceptance": rec.extra["max_acceptance"],
        }, fh, indent=2, sort_keys=True)
    click.echo(f"wrote {out}/stats.csv, spells.csv, summary.json, lambda.json")


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--nodes", type=int, required=True)
@click.option("--constraint", default="none", show_default=True)
@click.option("--duration", type=float, default=5.0, show_default=True,
              help="Base duration D0 used in the oracle chains.")
@click.option("--lambdas", default="4,8,16,32", show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def oracle(ctx, model_path, nodes, constraint, duration, lambdas, out):
    """Exact state-space report: certificates, distances, and fitted slopes."""
    from .oracle import (
        asymptotic_report,
        build_R,
        enumerate_states,
        exact_pi,
        stationary,
    )

    _, gout = _resolve(ctx, None, out)
    gout = gout or "report.json"
    model = _read_model_path(model_path)
    lam_list = sorted(_floats(lambdas))
    space = enumerate_states(nodes, Constraint.parse(constraint))
    pi = exact_pi(space, model)
    report = {
        "nodes": nodes,
        "constraint": constraint,
        "n_states": space.size,
        "connected": space.connected,
        "duration_base": duration,
        "lambdas": lam_list,
    }
    # detailed-balance certificate at the largest lambda
    dur = DurationSpec((duration,), lam_list[-1])
    R = build_R(space, model, dur)
    db = 0.0
    for i in range(space.size):
        for j in range(space.size):
            if i != j and R[i, j] > 0:
                db = max(db, abs(pi[i] * R[i, j] - pi[j] * R[j, i]))
    report["detailed_balance_residual"] = db
    report["stationary_tv_R_vs_pi"] = float(
        0.5 * np.abs(stationary(R) - pi).sum()
    )
    rep = asymptotic_report(space, model, (duration,), lam_list)
    report["rows"] = rep["rows"]
    report["slopes"] = rep["slopes"]
    with open(gout, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    click.echo(f"wrote {gout}")


@main.command()
@click.option("--terms", required=True, help="Comma-separated term specs.")
@click.option("--targets", required=True, help="Comma-separated target values.")
@click.option("--nodes", type=int, required=True)
@click.option("--exact", is_flag=True, help="Exact Newton fit on the enumerated "
              "state space (nodes <= 6).")
@click.option("--budget", type=int, default=4_000_000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def calibrate(ctx, terms, targets, nodes, exact, budget, seed, out):
    """Fit coefficients so expected statistics hit the targets."""
    seed, gout = _resolve(ctx, seed, out)
    gout = gout or "coefs.json"
    term_list = [parse_term(t) for t in _split_terms(terms)]
    target_list = _floats(targets)
    if len(term_list) != len(target_list):
        raise click.ClickException("terms and targets differ in length")
    result = {"terms": [str(t) for t in term_list], "targets": target_list,
              "nodes": nodes, "method": "exact" if exact else "stochastic"}
    try:
        if exact:
            from .oracle import enumerate_states

            theta = calibrate_exact(enumerate_states(nodes), term_list, target_list)
            result["theta"] = [float(x) for x in theta]
        else:
            res = calibrate_stochastic(
                term_list, target_list, nodes, budget=budget, seed=seed
            )
            result["theta"] = [float(x) for x in res.theta]
            result["achieved"] = [float(x) for x in res.achieved]
            result["stderr"] = [float(x) for x in res.stderr]
    except (NonConvergence, ValueError) as exc:
        raise click.ClickException(str(exc))
    with open(gout, "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
    click.echo(f"wrote {gout}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--design", type=click.Choice(
    ["deg1_sweep", "gwesp_sweep", "single_dyad", "oracle_suite"]), default=None)
@click.option("--full-scale", is_flag=True,
              help="Use the 1000-node reference scale.")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def experiment(ctx, config_path, design, full_scale, seed, out):
    """Run a batch experiment design; exits 2 if any grid cell failed."""
    seed, out = _resolve(ctx, seed, out)
    if out is None:
        raise click.ClickException("an output directory is required (--out)")
    kw = {}
    if config_path:
        cp = _read_config(config_path)
        sec = cp["experiment"]
        for key, cast in (
            ("design", str), ("node_count", int), ("degree2_target", float),
            ("gwesp_decay", float), ("replications", int), ("seed", int),
            ("proposals_multiplier", float), ("calibration_budget", int),
            ("tergm_steps", int), ("r_steps", int),
        ):
            if key in sec:
                kw[key] = cast(sec[key])
        for key in ("mean_degree", "degree1_target", "gwesp_target", "duration",
                    "prevalence", "oracle_lambdas"):
            if key in sec:
                kw[key] = tuple(_floats(sec[key]))
        if "variants" in sec:
            kw["variants"] = tuple(
                v.strip() for v in sec["variants"].split(",") if v.strip()
            )
    if design:
        kw["design"] = design
    if seed is not None and "seed" not in kw:
        kw["seed"] = seed
    if full_scale:
        kw["node_count"] = 1000
    try:
        cfg = ExperimentConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise click.ClickException(str(exc))
    result = run_experiment(cfg, out_dir=out, workers=ctx.obj.get("workers", 1))
    n_fail = len(result["failures"])
    click.echo(
        f"{len(result['rows'])} rows, {n_fail} failed cells -> {out}/errors.csv"
    )
    if n_fail:
        for f in result["failures"]:
            click.echo(f"FAILED {f.cell} [{f.variant}]: {f.message}", err=True)
        sys.exit(2)


@main.command()
@click.option("--print-defaults", is_flag=True)
def config(print_defaults):
    """Show the default configuration files."""
    if print_defaults:
        click.echo("# ---- simulation config (simulate-tergm / simulate-r) ----")
        click.echo(DEFAULT_SIM_CONFIG)
        click.echo("# ---- experiment config (experiment) ----")
        click.echo(DEFAULT_EXPERIMENT_CONFIG)
    else:
        click.echo("use --print-defaults to show the default config files")


if __name__ == "__main__":
    main()
