"""Sequential certification of probabilistically robust controller tuning.

Sample candidate controllers, rank them by a nominal surrogate, and stop as
soon as a lower confidence bound on the probability that the best-ranked
candidate meets the performance threshold on an uncertain plant reaches the
requested level.
"""
from .copulas import (
    FrankCopula, GaussianCopula, estimate_nu, frank_kendall, kendall_to_rho,
    rho_to_kendall,
)
from .engine import (
    CapExhausted, CopulaSource, EngineConfig, GaussianCopulaSource, StoppingReport,
    run_certification, run_tuning,
)
from .estimation import BivariateSample, confidence_widths
from .numerics import std_normal_cdf, std_normal_quantile
from .plant import PlantScenario, PlantSource, default_scenario, evaluate_pair, sample_controller
from .stopping import (
    StoppingBoundQuery, median_crossing_rho, optimized_stopping_bound,
    scenario_sample_bound, stopping_cdf_lower_bound,
)
from .success import (
    mu_sigma, p_hat_success, p_hat_success_omega, p_success_gaussian_oracle,
    p_success_mc_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "BivariateSample", "CapExhausted", "CopulaSource", "EngineConfig", "FrankCopula",
    "GaussianCopula", "GaussianCopulaSource", "PlantScenario", "PlantSource",
    "StoppingBoundQuery", "StoppingReport", "confidence_widths", "default_scenario",
    "estimate_nu", "evaluate_pair", "frank_kendall", "kendall_to_rho", "median_crossing_rho",
    "mu_sigma", "optimized_stopping_bound", "p_hat_success", "p_hat_success_omega",
    "p_success_gaussian_oracle", "p_success_mc_oracle", "rho_to_kendall", "run_certification",
    "run_tuning", "sample_controller", "scenario_sample_bound", "std_normal_cdf",
    "std_normal_quantile", "stopping_cdf_lower_bound",
]
