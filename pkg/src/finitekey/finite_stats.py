"""Concentration bounds and information-theoretic helpers.

Thin typed wrappers around the active kernel backend, plus the security
parameter bundle shared by both protocols.
"""

from __future__ import annotations

from dataclasses import dataclass

from finitekey._backend import kernels
from finitekey.errors import DegenerateInputsError, InvalidParametersError


@dataclass(frozen=True)
class SecurityParams:
    """Composable failure probabilities and the phase-error abort threshold."""

    eps_sec: float = 1e-10
    eps_cor: float = 1e-15
    phi_threshold: float = 0.11

    def __post_init__(self):
        for name in ("eps_sec", "eps_cor", "phi_threshold"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise InvalidParametersError(f"{name} outside (0, 1): {v!r}")

    @property
    def eps_pe(self) -> float:
        """Parameter-estimation failure probability of the non-decoy path."""
        return 2.0 * self.eps_sec / 3.0

    @property
    def eps_per_bound(self) -> float:
        """Per-invocation budget of the decoy path (21 concentration events)."""
        return self.eps_sec / 21.0


def binary_entropy(e: float) -> float:
    """Binary entropy H(e) in bits; H(0) = H(1) = 0."""
    return kernels.binary_entropy(e)


def chernoff_observed_upper(expected: float, eps: float) -> float:
    """Observed-count upper bound: Pr[observed >= bound] <= eps."""
    return kernels.chernoff_observed_upper(expected, eps)


def chernoff_observed_lower(expected: float, eps: float) -> float:
    """Observed-count lower bound: Pr[observed <= bound] <= eps."""
    return kernels.chernoff_observed_lower(expected, eps)


def chernoff_expected_bounds(observed: float, eps: float) -> tuple:
    """(lower, upper) bounds on the expectation behind an observed count.

    Each side inverts the matching observed-count bound in closed form, so
    round-tripping through those bounds reproduces the observation.
    """
    return (kernels.chernoff_expected_lower(observed, eps),
            kernels.chernoff_expected_upper(observed, eps))


def rate_fluctuation_upper(n_x: float, n_z: float, lam: float, eps: float) -> float:
    """Sampling-without-replacement increment on the unobserved-sample rate.

    ``n_x`` is the size of the sample whose rate is being bounded, ``n_z``
    the size of the observed sample with error rate ``lam``.
    """
    if n_x <= 0.0 or n_z <= 0.0:
        raise DegenerateInputsError(
            f"sample sizes must be positive: n_x={n_x!r}, n_z={n_z!r}")
    return kernels.rate_fluctuation_upper(n_x, n_z, lam, eps)


def error_correction_leakage(n: float, q: float, eps_cor: float) -> float:
    """Reconciliation leakage in bits, floored at 1.16 * n * H(q)."""
    return kernels.error_correction_leakage(n, q, eps_cor)
