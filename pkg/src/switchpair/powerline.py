"""Seeded simulator of one power source feeding several devices.

The user presses the switch according to a :class:`PressSchedule`; every
device loses power after its own actuation-to-power-loss delay. The output
is an :class:`EventTrace` of per-device observed times in milliseconds.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import InvalidInputError, PreconditionError
from .rng import stream
from .timebase import DevicePrecision, quantize

MIN_PRESSES = 5
HUMAN_INTERVAL_MS = 8000.0

_FAMILIES = {"constant", "uniform", "normal", "lognormal"}


@dataclass(frozen=True)
class Distribution:
    """A small distribution descriptor.

    ``constant``: ``a`` is the value. ``uniform``: range ``[a, b]``.
    ``normal``: mean ``a``, std ``b``; truncated at 0 by rejection when
    ``truncate`` is set. ``lognormal``: median ``a``, log-space sigma ``b``.
    """

    family: str
    a: float = 0.0
    b: float = 0.0
    truncate: bool = True

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InvalidInputError(f"unknown distribution family {self.family!r}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise InvalidInputError("distribution parameters must be finite")
        if self.family == "uniform" and self.b < self.a:
            raise InvalidInputError("uniform needs a <= b")
        if self.family in ("normal", "lognormal") and self.b < 0:
            raise InvalidInputError("spread parameter must be >= 0")
        if self.family == "lognormal" and self.a <= 0:
            raise InvalidInputError("lognormal median must be > 0")

    @classmethod
    def constant(cls, value: float) -> "Distribution":
        return cls("constant", value)

    @classmethod
    def uniform(cls, low: float, high: float) -> "Distribution":
        return cls("uniform", low, high)

    @classmethod
    def normal(cls, mean: float, std: float, truncate: bool = True) -> "Distribution":
        return cls("normal", mean, std, truncate)

    @classmethod
    def lognormal(cls, median: float, sigma_log: float) -> "Distribution":
        return cls("lognormal", median, sigma_log)

    @classmethod
    def parse(cls, text: str) -> "Distribution":
        """Parse ``family:p1[,p2]``, e.g. ``uniform:0,30`` or ``const:0``."""
        family, _, params = text.strip().partition(":")
        family = {"const": "constant", "unif": "uniform", "norm": "normal",
                  "lognorm": "lognormal"}.get(family, family)
        try:
            values = [float(v) for v in params.split(",") if v.strip()]
        except ValueError:
            raise InvalidInputError(f"bad distribution spec {text!r}") from None
        if family == "constant" and len(values) == 1:
            return cls.constant(values[0])
        if family in ("uniform", "normal", "lognormal") and len(values) == 2:
            return cls(family, *values)
        raise InvalidInputError(f"bad distribution spec {text!r}")

    def spec(self) -> str:
        if self.family == "constant":
            return f"constant:{self.a:g}"
        return f"{self.family}:{self.a:g},{self.b:g}"

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.family == "constant":
            return np.full(size, float(self.a))
        if self.family == "uniform":
            return rng.uniform(self.a, self.b, size)
        if self.family == "lognormal":
            return self.a * np.exp(self.b * rng.standard_normal(size))
        out = rng.normal(self.a, self.b, size)
        if self.truncate and self.b > 0:
            bad = out < 0
            while bad.any():
                out[bad] = rng.normal(self.a, self.b, int(bad.sum()))
                bad = out < 0
        elif self.truncate:
            out = np.maximum(out, 0.0)
        return out


DEFAULT_DELAY = Distribution.uniform(0.0, 30.0)
DEFAULT_HAND_OFFSET = Distribution.normal(0.0, 150.0, truncate=False)


@dataclass(frozen=True)
class DeviceProfile:
    precision: DevicePrecision = DevicePrecision(120.0)
    delay: Distribution = DEFAULT_DELAY
    failure_prob: float = 0.0
    reboot_penalty_ms: float = 500.0

    def __post_init__(self):
        if self.delay.family in ("uniform", "constant") and self.delay.a < 0:
            raise InvalidInputError("power-loss delays must be >= 0")
        if self.delay.family == "normal" and not self.delay.truncate:
            raise InvalidInputError("normal delay model must be truncated at 0")
        if not 0.0 <= self.failure_prob <= 1.0:
            raise InvalidInputError("failure_prob must lie in [0, 1]")


@dataclass(frozen=True)
class PressSchedule:
    press_times_ms: tuple

    def __post_init__(self):
        times = self.press_times_ms
        if any(not math.isfinite(t) for t in times):
            raise InvalidInputError("press times must be finite")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidInputError("press times must be strictly increasing")

    def __len__(self):
        return len(self.press_times_ms)


def sample_press_schedule(n: int, interval_model: Distribution = Distribution.constant(HUMAN_INTERVAL_MS),
                          seed: int = 0, align_tau_ms: Optional[float] = None,
                          min_presses: int = MIN_PRESSES) -> PressSchedule:
    """Draw ``n`` press instants; gaps come from ``interval_model``.

    With ``align_tau_ms`` every press is snapped to the centre of its bin.
    Attack studies that never pair may lower ``min_presses``.
    """
    if n < min_presses or n < 1:
        raise PreconditionError(f"pairing needs more than 4 presses, got {n}")
    rng = stream(seed, "schedule")
    gaps = interval_model.sample(rng, n)
    if np.any(gaps <= 0):
        raise InvalidInputError("interval model produced a non-positive gap")
    times = np.cumsum(gaps)
    if align_tau_ms is not None:
        times = (np.floor(times / align_tau_ms) + 0.5) * align_tau_ms
    return PressSchedule(tuple(float(t) for t in times))


def observe(profile: DeviceProfile, schedule: PressSchedule, seed: int, device_id: int = 0,
            actuation_ms: Optional[Sequence[float]] = None) -> List[float]:
    """Observed power-loss times for one device.

    ``actuation_ms`` overrides the switch instants (separate power sources).
    """
    presses = np.asarray(schedule.press_times_ms if actuation_ms is None else actuation_ms, dtype=float)
    n = len(presses)
    delays = profile.delay.sample(stream(seed, "delay", device_id), n)
    if profile.failure_prob > 0:
        failed = stream(seed, "failure", device_id).random(n) < profile.failure_prob
        delays = delays + failed * profile.reboot_penalty_ms
    return [float(t) for t in presses + delays]


@dataclass
class EventTrace:
    press_ms: List[float]
    actuation_ms: List[List[float]]
    observed_ms: List[List[float]]
    device_ids: List[int] = field(default_factory=list)

    def ticks(self, tau_ms: float, epoch_ms: float = 0.0) -> List[List[int]]:
        return [[quantize(t - epoch_ms, tau_ms) for t in row] for row in self.observed_ms]

    def write_csv(self, path, tau_ms: float, epoch_ms: float = 0.0) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["device_id", "press_index", "press_ms", "observed_ms", "tick"])
            for dev, act, row in zip(self.device_ids, self.actuation_ms, self.observed_ms):
                for i, (p, o) in enumerate(zip(act, row), start=1):
                    w.writerow([dev, i, f"{p:.6f}", f"{o:.6f}", quantize(o - epoch_ms, tau_ms)])


def run_trace(profiles: Sequence[DeviceProfile], schedule: PressSchedule, seed: int,
              hand_offset: Optional[Distribution] = None) -> EventTrace:
    """Fan one press schedule out to every device on the power source.

    With ``hand_offset`` set, device 0 sits on the user's first plug and
    every other device on its own plug, actuated with a per-press offset.
    """
    if len(profiles) < 2:
        raise InvalidInputError("a trace needs at least 2 devices")
    presses = list(schedule.press_times_ms)
    actuations, observed = [], []
    for dev, profile in enumerate(profiles):
        if hand_offset is not None and dev > 0:
            offs = hand_offset.sample(stream(seed, "offset", dev), len(presses))
            act = [p + float(o) for p, o in zip(presses, offs)]
        else:
            act = list(presses)
        actuations.append(act)
        observed.append(observe(profile, schedule, seed, dev, actuation_ms=act))
    return EventTrace(presses, actuations, observed, list(range(len(profiles))))
