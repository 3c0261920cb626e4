"""Python interface to the magnetic-catapult simulation core."""

from ._core import (
    budget_table,
    default_b0,
    evolve_gaussian,
    fit_velocity_slope,
    harmonic_A,
    hbar,
    minimum_uncertainty_widths,
    predict_amplitude,
    propagate,
    run_protocol,
    spin_coherence,
    superposition,
    t1_upper_bound,
)

__all__ = [
    "budget_table",
    "default_b0",
    "evolve_gaussian",
    "fit_velocity_slope",
    "harmonic_A",
    "hbar",
    "minimum_uncertainty_widths",
    "predict_amplitude",
    "propagate",
    "run_protocol",
    "spin_coherence",
    "superposition",
    "t1_upper_bound",
]
