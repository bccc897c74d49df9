"""Device clocks, tick quantization and common delay tolerance.

A tick is the number of whole tolerance intervals elapsed since the
synchronized epoch. Ticks are plain ``int`` values; only ticks ever enter
cryptographic material.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

from .errors import InvalidInputError

CC2640_PRECISION_MS = 50.0


@dataclass(frozen=True)
class DevicePrecision:
    tp_ms: float

    def __post_init__(self):
        if not (math.isfinite(self.tp_ms) and self.tp_ms > 0):
            raise InvalidInputError(f"time precision must be > 0, got {self.tp_ms!r}")


def quantize(elapsed_ms: float, tau_ms: float) -> int:
    """Return the tick index ``floor(elapsed_ms / tau_ms)``."""
    if not (math.isfinite(tau_ms) and tau_ms > 0):
        raise InvalidInputError(f"tau_ms must be a positive finite number, got {tau_ms!r}")
    if not math.isfinite(elapsed_ms) or elapsed_ms < 0:
        raise InvalidInputError(f"elapsed_ms must be finite and >= 0, got {elapsed_ms!r}")
    k = math.floor(elapsed_ms / tau_ms)
    # the division can round across a bin edge; settle against k * tau directly
    if k * tau_ms > elapsed_ms:
        k -= 1
    elif (k + 1) * tau_ms <= elapsed_ms:
        k += 1
    return k


def common_delay_tolerance(precisions: Iterable[Union[DevicePrecision, float]]) -> float:
    """Common tolerance of a device group: the coarsest precision among them."""
    values = [p.tp_ms if isinstance(p, DevicePrecision) else DevicePrecision(float(p)).tp_ms
              for p in precisions]
    if len(values) < 2:
        raise InvalidInputError("common delay tolerance needs at least 2 devices")
    return max(values)


@dataclass(frozen=True)
class DeviceClock:
    """A device clock started at a synchronized epoch.

    ``skew_ppm`` models a constant rate error after synchronization; it is
    zero in the default simulation.
    """

    epoch_ms: float = 0.0
    skew_ppm: float = 0.0

    def elapsed(self, true_ms: float) -> float:
        return (true_ms - self.epoch_ms) * (1.0 + self.skew_ppm * 1e-6)

    def tick(self, true_ms: float, tau_ms: float) -> int:
        return quantize(self.elapsed(true_ms), tau_ms)
