"""MAP estimation with mixed Gaussian priors by hybrid Krylov projection."""

from ._mixkry import (
    ArgumentError,
    BreakdownError,
    ConfigError,
    Error,
    IoError,
    MixGK,
    ParameterDomainError,
    SearchFailure,
    add_noise,
    compare_methods,
    crosswell_tomo,
    hutchinson_objective,
    kernel_eval,
    kernel_matrix,
    learn_matern,
    rademacher_probes,
    rblw_gamma,
    run_experiment,
    run_hybrid,
    sample_covariance,
    solve_map_dense,
    spherical_tomo,
    training_images,
)

__all__ = [
    "ArgumentError",
    "BreakdownError",
    "ConfigError",
    "Error",
    "IoError",
    "MixGK",
    "ParameterDomainError",
    "SearchFailure",
    "add_noise",
    "compare_methods",
    "crosswell_tomo",
    "hutchinson_objective",
    "kernel_eval",
    "kernel_matrix",
    "learn_matern",
    "rademacher_probes",
    "rblw_gamma",
    "run_experiment",
    "run_hybrid",
    "sample_covariance",
    "solve_map_dense",
    "spherical_tomo",
    "training_images",
]
