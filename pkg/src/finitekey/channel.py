"""Expected-value model of the channel, detectors and sifted blocks.

Counts are deterministic real-valued expectations, never sampled or rounded:
the key-length estimators consume them directly and rounding would put
artificial steps into small-block sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

from finitekey._backend import kernels
from finitekey.errors import InvalidParametersError
from finitekey.photon_source import PhotonDistribution, WcpSource, poisson_distribution


@dataclass(frozen=True)
class SystemParams:
    """Link and detector constants; channel loss is handled separately in dB."""

    rep_rate: float = 160.7e6
    p_mis: float = 0.003
    p_dc: float = 3.67e-8
    eta_det: float = 0.6525
    fibre_loss: float = 0.1904

    def __post_init__(self):
        if self.rep_rate <= 0.0:
            raise InvalidParametersError(f"repetition rate must be > 0: {self.rep_rate!r}")
        for name in ("p_mis", "p_dc", "eta_det"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidParametersError(f"{name} outside [0, 1]: {v!r}")
        if self.fibre_loss < 0.0:
            raise InvalidParametersError(f"fibre loss must be >= 0: {self.fibre_loss!r}")

    def km_to_db(self, distance_km: float) -> float:
        if distance_km < 0.0:
            raise InvalidParametersError(f"distance must be >= 0: {distance_km!r}")
        return distance_km * self.fibre_loss

    def signals_for_time(self, seconds: float) -> float:
        if seconds <= 0.0:
            raise InvalidParametersError(f"acquisition time must be > 0: {seconds!r}")
        return self.rep_rate * seconds


@dataclass(frozen=True)
class ProtocolSettings:
    """Basis bias and block size. n_sent = rep_rate * acquisition time."""

    p_x: float
    n_sent: float
    acq_time: float | None = None

    def __post_init__(self):
        if not 0.0 < self.p_x < 1.0:
            raise InvalidParametersError(f"basis bias outside (0, 1): {self.p_x!r}")
        if self.n_sent <= 0.0:
            raise InvalidParametersError(f"sent-signal count must be > 0: {self.n_sent!r}")

    @property
    def p_z(self) -> float:
        return 1.0 - self.p_x


@dataclass(frozen=True)
class ObservedBlockSps:
    """Sifted detection and error counts per basis for the single-intensity run."""

    n_rx: float
    n_rz: float
    m_x: float
    m_z: float

    def __post_init__(self):
        if min(self.n_rx, self.n_rz, self.m_x, self.m_z) < 0.0:
            raise InvalidParametersError("counts must be nonnegative")
        if self.m_x > self.n_rx or self.m_z > self.n_rz:
            raise InvalidParametersError("errors cannot exceed detections")


@dataclass(frozen=True)
class ObservedBlockWcp:
    """Sifted counts per basis and intensity (index 0 = signal, 2 = vacuum)."""

    n_x: tuple
    n_z: tuple
    m_x: tuple
    m_z: tuple

    def __post_init__(self):
        for field in (self.n_x, self.n_z, self.m_x, self.m_z):
            if len(field) != 3 or min(field) < 0.0:
                raise InvalidParametersError("three nonnegative counts per field required")
        for errs, dets in ((self.m_x, self.n_x), (self.m_z, self.n_z)):
            if any(m > n for m, n in zip(errs, dets)):
                raise InvalidParametersError("errors cannot exceed detections")


def channel_transmissivity(loss_db: float) -> float:
    """Transmissivity 10^(-loss/10) of a channel with the given loss in dB."""
    if loss_db < 0.0:
        raise InvalidParametersError(f"channel loss must be >= 0 dB: {loss_db!r}")
    return 10.0 ** (-loss_db / 10.0)


def click_probability(dist: PhotonDistribution, eta_sys: float, p_dc: float) -> float:
    """Detection probability per pulse; eta_sys = channel times detector.

    Any trusted attenuation is already folded into ``dist``, since the
    attenuator sits inside the sender's lab.
    """
    return kernels.click_probability(dist.probs, eta_sys, p_dc)


def error_probability(dist: PhotonDistribution, eta_sys: float, p_dc: float,
                      p_mis: float) -> float:
    """Error-event probability per pulse (vacuum dark counts plus misalignment)."""
    return kernels.error_probability(dist.probs, eta_sys, p_dc, p_mis)


def observed_counts_sps(settings: ProtocolSettings, p_click: float,
                        p_err: float) -> ObservedBlockSps:
    """Expected sifted counts: basis b keeps the p_b^2 fraction of detections."""
    wx = settings.n_sent * settings.p_x * settings.p_x
    wz = settings.n_sent * settings.p_z * settings.p_z
    return ObservedBlockSps(n_rx=wx * p_click, n_rz=wz * p_click,
                            m_x=wx * p_err, m_z=wz * p_err)


def observed_counts_wcp(settings: ProtocolSettings, source: WcpSource,
                        eta_sys: float, p_dc: float, p_mis: float,
                        tail_tol: float = 1e-12) -> ObservedBlockWcp:
    """Expected sifted counts per intensity under Poisson photon statistics."""
    wx = settings.n_sent * settings.p_x * settings.p_x
    wz = settings.n_sent * settings.p_z * settings.p_z
    n_x, n_z, m_x, m_z = [], [], [], []
    for mu_j, p_j in zip(source.mu, source.p_mu):
        dist = poisson_distribution(mu_j, tail_tol)
        pc = kernels.click_probability(dist.probs, eta_sys, p_dc)
        pe = kernels.error_probability(dist.probs, eta_sys, p_dc, p_mis)
        n_x.append(wx * p_j * pc)
        n_z.append(wz * p_j * pc)
        m_x.append(wx * p_j * pe)
        m_z.append(wz * p_j * pe)
    return ObservedBlockWcp(n_x=tuple(n_x), n_z=tuple(n_z),
                            m_x=tuple(m_x), m_z=tuple(m_z))
