"""Reinforced walks on finite weighted graphs, the random potential whose
Schrodinger operator carries them, restricted Green functions with wired
boundary, environment-fixed chains, and a reproducible Monte Carlo harness.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .betafield import (
    BetaSample,
    NuParams,
    banded_coupling,
    density,
    gig_half_sample,
    laplace_closed_form,
    log_density,
    marginal_params,
    sample_banded,
    sample_batch,
    sample_errw_env,
    sample_sequential,
    schur_step,
)
from .errors import (
    ConditioningError,
    ConfigError,
    CoverageError,
    DomainError,
    EnumerationError,
    FactorizationError,
    NumericError,
    PreconditionError,
    RestrictionError,
    SizeError,
    TestError,
    VrjpError,
)
from .graphs import (
    WeightedGraph,
    WiredGraph,
    boundary_weights,
    build_lattice_box,
    enumerate_paths,
    induced_subgraph,
    load_graph,
    path_weight,
    save_graph,
    wire_restrict,
)
from .harness import (
    EstimatorReport,
    ExperimentConfig,
    conductance_ratio_experiment,
    cosh_moment_experiment,
    diffusion_estimate,
    ks_test,
    psi_decay_experiment,
    rooted_u_samples,
    run_replicas,
    srw_paths,
    vrjp_diffusion_experiment,
    word_chi2,
)
from .processes import (
    AbsorptionReport,
    QuenchedRates,
    Trajectory,
    errw_words,
    escape_probability_formula,
    h_transform_rates,
    markov_words,
    mc_return_probability,
    quenched_mjp,
    simulate_errw,
    simulate_vrjp,
    simulate_vrjp_lattice,
    time_change,
    time_change_maps,
    vrjp_words,
)
from .schrodinger import (
    GreenBundle,
    IdentityReport,
    Operator,
    assemble_H,
    check_identities,
    green_bundle,
    q_density,
    spectrum_bottom,
    truncated_green_pathsum,
    u_field,
)
from .streams import stream
from .verify import CheckResult, run_suite

__all__ = [
    "__version__",
    # graphs
    "WeightedGraph",
    "WiredGraph",
    "build_lattice_box",
    "wire_restrict",
    "boundary_weights",
    "induced_subgraph",
    "enumerate_paths",
    "path_weight",
    "load_graph",
    "save_graph",
    # potential field
    "NuParams",
    "BetaSample",
    "laplace_closed_form",
    "density",
    "log_density",
    "gig_half_sample",
    "schur_step",
    "sample_sequential",
    "sample_batch",
    "sample_banded",
    "banded_coupling",
    "sample_errw_env",
    "marginal_params",
    # operator and Green functions
    "Operator",
    "GreenBundle",
    "IdentityReport",
    "assemble_H",
    "green_bundle",
    "u_field",
    "truncated_green_pathsum",
    "q_density",
    "spectrum_bottom",
    "check_identities",
    # processes
    "Trajectory",
    "QuenchedRates",
    "AbsorptionReport",
    "simulate_vrjp",
    "simulate_vrjp_lattice",
    "time_change",
    "time_change_maps",
    "simulate_errw",
    "quenched_mjp",
    "escape_probability_formula",
    "h_transform_rates",
    "mc_return_probability",
    "vrjp_words",
    "errw_words",
    "markov_words",
    # harness
    "EstimatorReport",
    "ExperimentConfig",
    "run_replicas",
    "ks_test",
    "word_chi2",
    "diffusion_estimate",
    "srw_paths",
    "vrjp_diffusion_experiment",
    "psi_decay_experiment",
    "rooted_u_samples",
    "cosh_moment_experiment",
    "conductance_ratio_experiment",
    # verification
    "CheckResult",
    "run_suite",
    # streams and errors
    "stream",
    "VrjpError",
    "DomainError",
    "SizeError",
    "RestrictionError",
    "EnumerationError",
    "FactorizationError",
    "NumericError",
    "ConditioningError",
    "CoverageError",
    "PreconditionError",
    "TestError",
    "ConfigError",
]
