"""Activated random walk and binomial update process simulations."""

from ._arwlab import (
    CSV_HEADER,
    UsageError,
    binomial_tail,
    constants,
    derive_p,
    exact_final_pmf,
    gumbel_cdf,
    mu,
    normalize_S,
    run_fixed_energy,
    run_scenario,
    run_to_hitting,
    sample_stationary_S,
)

__all__ = [
    "CSV_HEADER",
    "UsageError",
    "binomial_tail",
    "constants",
    "derive_p",
    "exact_final_pmf",
    "gumbel_cdf",
    "mu",
    "normalize_S",
    "run_fixed_energy",
    "run_scenario",
    "run_to_hitting",
    "sample_stationary_S",
]
