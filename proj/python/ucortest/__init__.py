"""Max-type tests for the equality of two U-statistic based correlation matrices."""

from ._core import (
    UCorTestError,
    concordance_profile,
    critical_value_full,
    critical_value_row,
    kruskal_variance,
    p_value_full,
    p_value_row,
    pseudo_variance,
    simulate,
    sine_latent_correlation,
    tau_matrix,
    tau_pair,
    test,
)

__all__ = [
    "UCorTestError",
    "concordance_profile",
    "critical_value_full",
    "critical_value_row",
    "kruskal_variance",
    "p_value_full",
    "p_value_row",
    "pseudo_variance",
    "simulate",
    "sine_latent_correlation",
    "tau_matrix",
    "tau_pair",
    "test",
]

__version__ = "0.1.0"
