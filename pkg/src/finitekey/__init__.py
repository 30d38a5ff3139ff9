"""Finite-key secure key rates: non-decoy single-photon source versus
2-decoy weak-coherent-pulse BB84.

The hot kernels run from a compiled extension when available; ``BACKEND``
names the active implementation.
"""

from finitekey._backend import BACKEND
from finitekey.channel import (ObservedBlockSps, ObservedBlockWcp, ProtocolSettings,
                               SystemParams, channel_transmissivity,
                               click_probability, error_probability,
                               observed_counts_sps, observed_counts_wcp)
from finitekey.finite_stats import (SecurityParams, binary_entropy,
                                    chernoff_expected_bounds,
                                    chernoff_observed_lower,
                                    chernoff_observed_upper,
                                    error_correction_leakage,
                                    rate_fluctuation_upper)
from finitekey.optimize import (AsymptoticResult, GridSpec, MaxLossResult,
                                OptimizationResult, asymptotic_key_rate,
                                max_tolerable_loss, optimize_sps, optimize_wcp)
from finitekey.photon_source import (PhotonDistribution, SpsSource, WcpSource,
                                     attenuate, md_distribution,
                                     multiphoton_upper_bound,
                                     pathological_distribution,
                                     poisson_distribution)
from finitekey.results import AbortReason, KeyResult
from finitekey.sps import (SpsKeyInputs, evaluate_sps, multiphoton_event_upper,
                           nonmultiphoton_lower, phase_error_upper,
                           sps_key_length, sps_key_length_vacuum)
from finitekey.wcp import (DecoyEstimate, decoy_bounds, emission_probability,
                           evaluate_wcp, wcp_key_length)

__version__ = "0.1.0"

__all__ = [
    "AbortReason", "AsymptoticResult", "BACKEND", "DecoyEstimate", "GridSpec",
    "KeyResult", "MaxLossResult", "ObservedBlockSps", "ObservedBlockWcp",
    "OptimizationResult", "PhotonDistribution", "ProtocolSettings",
    "SecurityParams", "SpsKeyInputs", "SpsSource", "SystemParams", "WcpSource",
    "asymptotic_key_rate", "attenuate", "binary_entropy",
    "channel_transmissivity", "chernoff_expected_bounds",
    "chernoff_observed_lower", "chernoff_observed_upper", "click_probability",
    "decoy_bounds", "emission_probability", "error_correction_leakage",
    "error_probability", "evaluate_sps", "evaluate_wcp", "max_tolerable_loss",
    "md_distribution", "multiphoton_event_upper", "multiphoton_upper_bound",
    "nonmultiphoton_lower", "observed_counts_sps", "observed_counts_wcp",
    "optimize_sps", "optimize_wcp", "pathological_distribution",
    "phase_error_upper", "poisson_distribution", "rate_fluctuation_upper",
    "sps_key_length", "sps_key_length_vacuum", "wcp_key_length",
]
