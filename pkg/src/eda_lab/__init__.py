"""Dissolution-approximation toolkit for separable temporal ergms.

Closed-form coefficient transforms and their error theory, discrete- and
small-time-step simulators, exact small-graph oracles, moment-matching
calibration, and a batch experiment runner.  See the README for a tour.
"""

from ._kernels import BACKEND
from .calibrate import (
    CalibrationResult,
    NonConvergence,
    calibrate_exact,
    calibrate_stochastic,
    edges_only_theta,
)
from .experiments import (
    CellFailure,
    ExperimentConfig,
    deg1_reference,
    emit_plotdata,
    run_experiment,
)
from .infchain import (
    AcceptanceOverflow,
    RChain,
    RSpec,
    lambda_min_random_toggle,
    lambda_tnt_analogue,
    r_rate,
    simulate_R,
    step_R,
)
from .net import Constraint, DurationSpec, DyadTyper, Network, Spell
from .oracle import (
    NormalizationFailure,
    asymptotic_report,
    build_R,
    build_T,
    enumerate_states,
    exact_expectations,
    exact_pi,
    mean_edge_duration_exact,
    stationary,
)
from .stats import Model, Term, parse_term, read_model_file, write_model_file
from .tergm import (
    SimulationRecord,
    TergmSpec,
    apply_variant,
    bernoulli_network,
    mean_duration_estimates,
    simulate_tergm,
)
from .transforms import (
    ConsistencyViolation,
    crossover_threshold,
    equilibrium_edge_prob,
    inv_logit,
    logit,
    relative_error,
    transform_exact,
    transform_new,
    transform_old,
)

__version__ = "1.0.0"
