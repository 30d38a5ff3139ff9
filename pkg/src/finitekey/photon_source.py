"""Photon-number distributions for the two source types.

The single-photon source is only partially characterised, by its mean photon
number and second-order correlation g2(0). Those two numbers pin down a
three-state distribution on {0, 1, 2} photons that saturates the multiphoton
bound g2 * mean^2 / 2; any support on higher photon numbers at the same
(mean, g2) can only lower the multiphoton probability. The weak-coherent
source is Poissonian per intensity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from finitekey._backend import kernels
from finitekey.errors import InvalidParametersError

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class PhotonDistribution:
    """Finite photon-number probability vector indexed by photon count."""

    probs: tuple

    def __post_init__(self):
        if len(self.probs) == 0:
            raise InvalidParametersError("empty photon-number distribution")
        total = 0.0
        for k, p in enumerate(self.probs):
            if p < -_SUM_TOL or p > 1.0 + _SUM_TOL:
                raise InvalidParametersError(
                    f"probability for {k} photons outside [0, 1]: {p!r}")
            total += p
        if abs(total - 1.0) > _SUM_TOL:
            raise InvalidParametersError(
                f"photon-number probabilities sum to {total!r}, not 1")

    @property
    def mean(self) -> float:
        return sum(k * p for k, p in enumerate(self.probs))

    @property
    def g2(self) -> float:
        """Second-order correlation sum k(k-1) p_k / mean^2 (0 for vacuum)."""
        m = self.mean
        if m == 0.0:
            return 0.0
        return sum(k * (k - 1) * p for k, p in enumerate(self.probs)) / (m * m)

    @property
    def multiphoton_probability(self) -> float:
        return sum(self.probs[2:])


@dataclass(frozen=True)
class SpsSource:
    """Partially characterised single-photon source with a trusted attenuator."""

    mean: float
    g2: float
    eta_tr: float = 1.0

    def __post_init__(self):
        if self.mean <= 0.0:
            raise InvalidParametersError(f"mean photon number must be > 0: {self.mean!r}")
        if self.g2 < 0.0:
            raise InvalidParametersError(f"g2 must be >= 0: {self.g2!r}")
        if self.g2 * self.mean > 1.0:
            raise InvalidParametersError(
                "g2 * mean > 1 makes the single-photon probability negative")
        if not 0.0 < self.eta_tr <= 1.0:
            raise InvalidParametersError(
                f"attenuator transmissivity outside (0, 1]: {self.eta_tr!r}")


@dataclass(frozen=True)
class WcpSource:
    """Weak-coherent-pulse source with signal, weak decoy and vacuum intensities."""

    mu: tuple
    p_mu: tuple

    def __post_init__(self):
        if len(self.mu) != 3 or len(self.p_mu) != 3:
            raise InvalidParametersError("exactly three intensities are required")
        mu1, mu2, mu3 = self.mu
        if not mu1 > mu2 > mu3:
            raise InvalidParametersError(f"intensities must be ordered mu1 > mu2 > mu3: {self.mu!r}")
        if mu3 != 0.0:
            raise InvalidParametersError("the weakest decoy must be a vacuum intensity")
        if any(p <= 0.0 for p in self.p_mu):
            raise InvalidParametersError("intensity-choice probabilities must be > 0")
        if abs(sum(self.p_mu) - 1.0) > _SUM_TOL:
            raise InvalidParametersError("intensity-choice probabilities must sum to 1")


def md_distribution(mean: float, g2: float) -> PhotonDistribution:
    """Three-state distribution on {0, 1, 2} photons matching (mean, g2).

    p2 = g2 * mean^2 / 2 saturates the multiphoton upper bound; p1 and p0
    follow from the mean and normalisation.
    """
    if mean <= 0.0 or g2 < 0.0 or g2 * mean > 1.0:
        raise InvalidParametersError(
            f"no valid three-state distribution for mean={mean!r}, g2={g2!r}")
    p2 = 0.5 * g2 * mean * mean
    p1 = mean - 2.0 * p2
    p0 = 1.0 - p1 - p2
    if p1 < 0.0 or p0 < 0.0:
        raise InvalidParametersError(
            f"mean={mean!r}, g2={g2!r} give negative emission probabilities")
    return PhotonDistribution((p0, p1, p2))


def pathological_distribution(mean: float, g2: float, k: int) -> PhotonDistribution:
    """Distribution supported on {0, 1, K} photons matching (mean, g2).

    All multiphoton mass sits in the K-photon state, so its multiphoton
    probability g2 * mean^2 / (K (K - 1)) is strictly below the K = 2 bound.
    Exposed for property checks only; the key-rate paths never use it.
    """
    if k < 3 or int(k) != k:
        raise InvalidParametersError(f"support photon number must be an integer >= 3: {k!r}")
    if mean <= 0.0 or g2 < 0.0:
        raise InvalidParametersError(f"invalid mean={mean!r} or g2={g2!r}")
    p_k = g2 * mean * mean / (k * (k - 1.0))
    p1 = mean - k * p_k
    p0 = 1.0 - p1 - p_k
    if p1 < 0.0 or p0 < 0.0:
        raise InvalidParametersError(
            f"mean={mean!r}, g2={g2!r}, K={k!r} give negative emission probabilities")
    probs = [0.0] * (k + 1)
    probs[0] = p0
    probs[1] = p1
    probs[k] = p_k
    return PhotonDistribution(tuple(probs))


def attenuate(dist: PhotonDistribution, eta: float) -> PhotonDistribution:
    """Binomial loss: each photon independently survives with probability eta."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidParametersError(f"transmissivity outside [0, 1]: {eta!r}")
    n = len(dist.probs)
    out = [0.0] * n
    for k, p_k in enumerate(dist.probs):
        if p_k == 0.0:
            continue
        for j in range(k + 1):
            out[j] += p_k * _binom(k, j) * eta ** j * (1.0 - eta) ** (k - j)
    # Renormalisation guard: the convolution conserves mass up to rounding.
    total = sum(out)
    out[0] += 1.0 - total
    return PhotonDistribution(tuple(out))


def _binom(k: int, j: int) -> float:
    # Iterative product; supports are tiny so floats are exact here.
    if j < 0 or j > k:
        return 0.0
    j = min(j, k - j)
    acc = 1.0
    for i in range(j):
        acc = acc * (k - i) / (i + 1.0)
    return acc


def multiphoton_upper_bound(source: SpsSource) -> float:
    """Multiphoton probability bound g2 (eta_tr mean)^2 / 2 after pre-attenuation."""
    m = source.eta_tr * source.mean
    return 0.5 * source.g2 * m * m


def poisson_distribution(mu: float, tail_tol: float = 1e-12) -> PhotonDistribution:
    """Truncated Poisson distribution; residual tail folded into the last bin."""
    if mu < 0.0:
        raise InvalidParametersError(f"mean photon number must be >= 0: {mu!r}")
    if tail_tol <= 0.0:
        raise InvalidParametersError(f"tail tolerance must be > 0: {tail_tol!r}")
    return PhotonDistribution(tuple(kernels.poisson_probs(mu, tail_tol)))
