"""Shared result types for both protocols."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace


class AbortReason(enum.Enum):
    NONE = "none"
    PHASE_THRESHOLD = "phase-threshold"
    PNS_CONDITION = "pns-condition"
    NEGATIVE_LENGTH = "negative-length"


# Kernel abort codes map onto the enum by position.
_ABORT_BY_CODE = (AbortReason.NONE, AbortReason.PHASE_THRESHOLD,
                  AbortReason.PNS_CONDITION, AbortReason.NEGATIVE_LENGTH)


def abort_from_code(code: int) -> AbortReason:
    return _ABORT_BY_CODE[code]


@dataclass(frozen=True)
class KeyResult:
    """Secure key length and rates for one protocol evaluation.

    ``skl`` is zero whenever ``abort_reason`` is not NONE. ``skr_per_sec``
    is filled only where the acquisition time is known.
    """

    skl: float
    skr: float
    abort_reason: AbortReason
    skr_per_sec: float | None = None
    phi_bar: float | None = None

    def __post_init__(self):
        if self.skl < 0.0:
            raise ValueError(f"secure key length must be >= 0: {self.skl!r}")
        if self.abort_reason is not AbortReason.NONE and self.skl != 0.0:
            raise ValueError("aborted evaluations must carry zero key")

    def with_time(self, seconds: float) -> "KeyResult":
        return replace(self, skr_per_sec=self.skl / seconds)


def key_result(skl: float, n_sent: float, abort: AbortReason,
               phi_bar: float | None = None) -> KeyResult:
    return KeyResult(skl=skl, skr=skl / n_sent, abort_reason=abort, phi_bar=phi_bar)
