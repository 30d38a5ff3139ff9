"""Secure key length of the 2-decoy protocol with weak coherent pulses.

The three intensities (signal, weak decoy, vacuum) share photon-number
yields, so linear combinations of the per-intensity counts bound the vacuum
and single-photon contributions from below and the single-photon errors from
above. Observed counts are first converted to expectation bounds, then
rescaled by exp(mu)/p_mu into per-pulse-class terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from finitekey import finite_stats as fs
from finitekey.channel import (ObservedBlockWcp, ProtocolSettings, SystemParams,
                               channel_transmissivity, observed_counts_wcp)
from finitekey.errors import DegenerateDecoyError
from finitekey.finite_stats import SecurityParams
from finitekey.photon_source import WcpSource
from finitekey.results import AbortReason, KeyResult, key_result


@dataclass(frozen=True)
class DecoyEstimate:
    """Decoy-state bounds feeding the key-length formula."""

    s0_lower: float
    s1_lower_x: float
    s1_lower_z: float
    v1_upper: float
    phi_upper: float


def emission_probability(k: int, source: WcpSource) -> float:
    """Total probability of emitting exactly k photons across intensities."""
    if k < 0:
        raise ValueError(f"photon number must be >= 0: {k!r}")
    return sum(p * math.exp(-mu) * mu ** k / math.factorial(k)
               for mu, p in zip(source.mu, source.p_mu))


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else (x if x < hi else hi)


def decoy_bounds(block: ObservedBlockWcp, source: WcpSource,
                 security: SecurityParams, n_sent: float, p_x: float) -> DecoyEstimate:
    """Vacuum/single-photon event bounds from the per-intensity counts."""
    mu1, mu2, mu3 = source.mu
    denom = mu1 * (mu2 - mu3) - mu2 * mu2 + mu3 * mu3
    if denom <= 0.0:
        raise DegenerateDecoyError(
            f"intensity set {source.mu!r} cannot separate photon-number yields")
    eps = security.eps_per_bound
    scale = tuple(math.exp(mu) / p for mu, p in zip(source.mu, source.p_mu))

    def lo(counts, j):
        return scale[j] * fs.chernoff_expected_bounds(counts[j], eps)[0]

    def hi(counts, j):
        return scale[j] * fs.chernoff_expected_bounds(counts[j], eps)[1]

    tau0 = emission_probability(0, source)
    tau1 = emission_probability(1, source)
    wx = n_sent * p_x * p_x
    wz = n_sent * (1.0 - p_x) * (1.0 - p_x)
    dmu = mu2 - mu3
    s0x = tau0 * (mu2 * lo(block.n_x, 2) - mu3 * hi(block.n_x, 1)) / dmu
    s0x = _clamp(s0x, 0.0, wx * tau0)
    s0z = tau0 * (mu2 * lo(block.n_z, 2) - mu3 * hi(block.n_z, 1)) / dmu
    s0z = _clamp(s0z, 0.0, wz * tau0)
    ratio = (mu2 * mu2 - mu3 * mu3) / (mu1 * mu1)
    # The bracket subtracts the vacuum share, so its conservative direction
    # uses the vacuum lower bound.
    s1x = tau1 * mu1 * (lo(block.n_x, 1) - hi(block.n_x, 2)
                        - ratio * (hi(block.n_x, 0) - s0x / tau0)) / denom
    s1x = _clamp(s1x, 0.0, wx * tau1)
    s1z = tau1 * mu1 * (lo(block.n_z, 1) - hi(block.n_z, 2)
                        - ratio * (hi(block.n_z, 0) - s0z / tau0)) / denom
    s1z = _clamp(s1z, 0.0, wz * tau1)
    v1 = tau1 * (hi(block.m_z, 1) - lo(block.m_z, 2)) / dmu
    v1 = _clamp(v1, 0.0, wz * tau1)
    # The decoy algebra bounds expectations; convert back to observed-count
    # bounds before they enter the key formula and the sampling bound.
    s0x = fs.chernoff_observed_lower(s0x, eps)
    s1x = fs.chernoff_observed_lower(s1x, eps)
    s1z = fs.chernoff_observed_lower(s1z, eps)
    v1 = _clamp(fs.chernoff_observed_upper(v1, eps), 0.0, wz * tau1)
    if s1z > 0.0:
        rate = min(v1 / s1z, 1.0)
        if s1x > 0.0:
            phi = min(rate + fs.rate_fluctuation_upper(s1x, s1z, rate, eps), 1.0)
        else:
            phi = 1.0
    else:
        phi = 1.0
    return DecoyEstimate(s0_lower=s0x, s1_lower_x=s1x, s1_lower_z=s1z,
                         v1_upper=v1, phi_upper=phi)


def wcp_key_length(block: ObservedBlockWcp, source: WcpSource,
                   settings: ProtocolSettings, security: SecurityParams) -> KeyResult:
    """Extractable key length from the sifted block (2-decoy protocol)."""
    est = decoy_bounds(block, source, security, settings.n_sent, settings.p_x)
    if est.s1_lower_x <= 0.0 or est.s1_lower_z <= 0.0:
        return key_result(0.0, settings.n_sent, AbortReason.PNS_CONDITION)
    if est.phi_upper >= security.phi_threshold:
        return key_result(0.0, settings.n_sent, AbortReason.PHASE_THRESHOLD,
                          est.phi_upper)
    n_tot = sum(block.n_x)
    m_tot = sum(block.m_x)
    if n_tot <= 0.0:
        return key_result(0.0, settings.n_sent, AbortReason.PNS_CONDITION)
    leak = fs.error_correction_leakage(n_tot, m_tot / n_tot, security.eps_cor)
    skl = (est.s0_lower + est.s1_lower_x * (1.0 - fs.binary_entropy(est.phi_upper))
           - leak - 6.0 * math.log2(21.0 / security.eps_sec)
           - math.log2(2.0 / security.eps_cor))
    if skl <= 0.0:
        return key_result(0.0, settings.n_sent, AbortReason.NEGATIVE_LENGTH,
                          est.phi_upper)
    return key_result(skl, settings.n_sent, AbortReason.NONE, est.phi_upper)


def evaluate_wcp(system: SystemParams, source: WcpSource, loss_db: float,
                 n_sent: float, p_x: float,
                 security: SecurityParams | None = None) -> KeyResult:
    """Compose source, channel and estimator for one operating point."""
    security = security or SecurityParams()
    eta_sys = channel_transmissivity(loss_db) * system.eta_det
    settings = ProtocolSettings(p_x=p_x, n_sent=n_sent)
    block = observed_counts_wcp(settings, source, eta_sys, system.p_dc, system.p_mis)
    return wcp_key_length(block, source, settings, security)
