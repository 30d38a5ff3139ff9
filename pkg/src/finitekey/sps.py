"""Secure key length of the non-decoy protocol with a single-photon source.

Security against photon-number splitting rests on excluding every event that
could stem from a multiphoton emission: the sent multiphotons are bounded by
the source characterisation, the received ones by a concentration bound with
the worst-case assumption that each sent multiphoton clicks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from finitekey import finite_stats as fs
from finitekey.channel import (ObservedBlockSps, ProtocolSettings, SystemParams,
                               channel_transmissivity, click_probability,
                               error_probability, observed_counts_sps)
from finitekey.errors import DegenerateBlockError, InvalidParametersError
from finitekey.finite_stats import SecurityParams
from finitekey.photon_source import (PhotonDistribution, SpsSource, attenuate,
                                     md_distribution, multiphoton_upper_bound)
from finitekey.results import AbortReason, KeyResult, key_result

VACUUM_MODES = ("exact-vacuum", "bounded-vacuum")


@dataclass(frozen=True)
class SpsKeyInputs:
    """Everything the key-length estimator consumes for one block."""

    block: ObservedBlockSps
    n_sent: float
    p_x: float
    pmp_att: float
    p_click: float
    security: SecurityParams
    p_dc: float = 0.0  # needed only by the vacuum-accounting variants

    def __post_init__(self):
        if self.n_sent <= 0.0:
            raise InvalidParametersError(f"sent-signal count must be > 0: {self.n_sent!r}")
        if not 0.0 < self.p_x < 1.0:
            raise InvalidParametersError(f"basis bias outside (0, 1): {self.p_x!r}")
        if not 0.0 <= self.pmp_att <= 1.0:
            raise InvalidParametersError(f"multiphoton bound outside [0, 1]: {self.pmp_att!r}")
        if not 0.0 <= self.p_click <= 1.0:
            raise InvalidParametersError(f"click probability outside [0, 1]: {self.p_click!r}")


def multiphoton_event_upper(n_sent: float, p_basis: float, pmp_att: float,
                            eps_pe: float) -> float:
    """Upper bound on sifted multiphoton detections in one basis.

    Worst case: every sent multiphoton causes a click, so the expectation is
    n_sent * p_basis^2 * pmp_att before the concentration correction.
    """
    return fs.chernoff_observed_upper(n_sent * p_basis * p_basis * pmp_att, eps_pe)


def nonmultiphoton_lower(n_r: float, n_mp_upper: float) -> float:
    """Certified non-multiphoton detections; negative means no shared key."""
    return n_r - n_mp_upper


def phase_error_upper(m_z: float, nmp_z_lower: float, n_rx: float, n_rz: float,
                      eps_pe: float) -> float:
    """Phase-error bound for the key basis from the announced Z-basis errors."""
    if nmp_z_lower <= 0.0:
        raise DegenerateBlockError(
            "no certified non-multiphoton events in the estimation basis")
    phi = m_z / nmp_z_lower
    if phi > 1.0:
        phi = 1.0
    phi_bar = phi + fs.rate_fluctuation_upper(n_rx, n_rz, phi, eps_pe)
    return min(phi_bar, 1.0)


def _penalty_bits(security: SecurityParams) -> float:
    return 2.0 * math.log2(3.0 / security.eps_sec) + math.log2(2.0 / security.eps_cor)


def sps_key_length(inputs: SpsKeyInputs) -> KeyResult:
    """Extractable key length from the sifted block (non-decoy protocol)."""
    sec = inputs.security
    blk = inputs.block
    if inputs.p_click <= inputs.pmp_att:
        return key_result(0.0, inputs.n_sent, AbortReason.PNS_CONDITION)
    nmp_x = nonmultiphoton_lower(
        blk.n_rx, multiphoton_event_upper(inputs.n_sent, inputs.p_x,
                                          inputs.pmp_att, sec.eps_pe))
    nmp_z = nonmultiphoton_lower(
        blk.n_rz, multiphoton_event_upper(inputs.n_sent, 1.0 - inputs.p_x,
                                          inputs.pmp_att, sec.eps_pe))
    return _finish(inputs, secure_x=nmp_x, denom_z=nmp_z, credit=0.0)


def sps_key_length_vacuum(mode: str, inputs: SpsKeyInputs,
                          dist: PhotonDistribution) -> KeyResult:
    """Key length when vacuum and single-photon events are accounted separately.

    ``dist`` is the attenuated emission distribution entering the channel.
    In exact-vacuum mode the vacuum contribution (dark-count clicks on empty
    pulses) is known and credited in full without an entropy penalty; in
    bounded-vacuum mode only the certified lower bound 1 - mean is credited
    and the subtraction uses the all-pulses-empty dark-count ceiling.
    """
    if mode not in VACUUM_MODES:
        raise InvalidParametersError(f"unknown vacuum accounting mode: {mode!r}")
    sec = inputs.security
    blk = inputs.block
    if inputs.p_click <= inputs.pmp_att:
        return key_result(0.0, inputs.n_sent, AbortReason.PNS_CONDITION)
    p_z = 1.0 - inputs.p_x
    wx = inputs.n_sent * inputs.p_x * inputs.p_x
    wz = inputs.n_sent * p_z * p_z
    nmp_x = nonmultiphoton_lower(
        blk.n_rx, multiphoton_event_upper(inputs.n_sent, inputs.p_x,
                                          inputs.pmp_att, sec.eps_pe))
    nmp_z = nonmultiphoton_lower(
        blk.n_rz, multiphoton_event_upper(inputs.n_sent, p_z,
                                          inputs.pmp_att, sec.eps_pe))
    if mode == "exact-vacuum":
        credit = wx * dist.probs[0] * inputs.p_dc
        s1_x = nmp_x - credit
        s1_z = nmp_z - wz * dist.probs[0] * inputs.p_dc
    else:
        mean = dist.mean
        if mean > 1.0:
            raise InvalidParametersError(
                "bounded-vacuum accounting needs attenuated mean <= 1")
        credit = wx * (1.0 - mean) * inputs.p_dc
        s1_x = nmp_x - fs.chernoff_observed_upper(wx * inputs.p_dc, sec.eps_pe)
        s1_z = nmp_z - fs.chernoff_observed_upper(wz * inputs.p_dc, sec.eps_pe)
    return _finish(inputs, secure_x=s1_x, denom_z=s1_z, credit=credit)


def _finish(inputs: SpsKeyInputs, secure_x: float, denom_z: float,
            credit: float) -> KeyResult:
    sec = inputs.security
    blk = inputs.block
    if secure_x <= 0.0 or denom_z <= 0.0:
        return key_result(0.0, inputs.n_sent, AbortReason.PNS_CONDITION)
    phi_bar = phase_error_upper(blk.m_z, denom_z, blk.n_rx, blk.n_rz, sec.eps_pe)
    if phi_bar >= sec.phi_threshold:
        return key_result(0.0, inputs.n_sent, AbortReason.PHASE_THRESHOLD, phi_bar)
    # m_x is never announced; it enters only through the leakage estimate.
    leak = fs.error_correction_leakage(blk.n_rx, blk.m_x / blk.n_rx, sec.eps_cor)
    skl = (credit + secure_x * (1.0 - fs.binary_entropy(phi_bar)) - leak
           - _penalty_bits(sec))
    if skl <= 0.0:
        return key_result(0.0, inputs.n_sent, AbortReason.NEGATIVE_LENGTH, phi_bar)
    return key_result(skl, inputs.n_sent, AbortReason.NONE, phi_bar)


def evaluate_sps(system: SystemParams, source: SpsSource, loss_db: float,
                 n_sent: float, p_x: float,
                 security: SecurityParams | None = None,
                 variant: str = "plain") -> KeyResult:
    """Compose source, channel and estimator for one operating point."""
    security = security or SecurityParams()
    dist = attenuate(md_distribution(source.mean, source.g2), source.eta_tr)
    eta_sys = channel_transmissivity(loss_db) * system.eta_det
    p_click = click_probability(dist, eta_sys, system.p_dc)
    p_err = error_probability(dist, eta_sys, system.p_dc, system.p_mis)
    settings = ProtocolSettings(p_x=p_x, n_sent=n_sent)
    block = observed_counts_sps(settings, p_click, p_err)
    inputs = SpsKeyInputs(block=block, n_sent=n_sent, p_x=p_x,
                          pmp_att=multiphoton_upper_bound(source),
                          p_click=p_click, security=security, p_dc=system.p_dc)
    if variant == "plain":
        return sps_key_length(inputs)
    return sps_key_length_vacuum(variant, inputs, dist)
