"""Declarative experiment configuration, loadable from YAML."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional

import yaml

from ..errors import ConfigurationError, InvalidInputError
from ..powerline import Distribution

CAMPAIGN_NAMES = ("TolSweep", "PressSweep", "MultiDevice", "FaultGrid", "Peeper", "Mitm", "HashBench")
_ALIASES = {name.lower(): name for name in CAMPAIGN_NAMES}
_ALIASES.update({"tol": "TolSweep", "press": "PressSweep", "multi": "MultiDevice",
                 "fault": "FaultGrid", "bench": "HashBench"})


def parse_list(text, cast=float) -> list:
    """``"120,140"`` or an inclusive range ``"20:120:20"``."""
    if isinstance(text, (list, tuple)):
        return [cast(v) for v in text]
    if isinstance(text, (int, float)):
        return [cast(text)]
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ConfigurationError(f"range step must be > 0 in {text!r}")
            out, v = [], start
            while v <= stop + 1e-9:
                out.append(cast(v))
                v += step
            return out
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"cannot parse list {text!r}") from None


@dataclass
class ExperimentConfig:
    campaign: str = "TolSweep"
    trials: int = 1000
    taus: List[float] = field(default_factory=lambda: [120.0])
    presses: List[int] = field(default_factory=lambda: [5])
    devices: int = 2
    faults: List[float] = field(default_factory=lambda: [0.0])
    jitter: str = "uniform:0,30"
    interval: str = "normal:8000,500"
    align: bool = True
    failure_prob: float = 0.0
    hand_offset: Optional[str] = None
    reaction: str = "lognormal:215,0.25"
    strategy: str = "uniform"
    algorithms: List[str] = field(default_factory=lambda: ["md5", "sha256"])
    iterations: List[int] = field(default_factory=lambda: [500, 1000, 1500, 2000, 2500])
    seed: int = 0
    workers: int = 1
    out: Optional[str] = None

    def validate(self) -> "ExperimentConfig":
        name = _ALIASES.get(str(self.campaign).lower())
        if name is None:
            raise ConfigurationError(f"unknown campaign {self.campaign!r}; pick one of {CAMPAIGN_NAMES}")
        self.campaign = name
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        for label in ("taus", "presses", "faults"):
            if not getattr(self, label):
                raise ConfigurationError(f"{label} must not be empty")
        if any(t <= 0 for t in self.taus):
            raise ConfigurationError("every tau must be > 0")
        if any(not 0 <= f < 1 for f in self.faults):
            raise ConfigurationError("fault tolerances must lie in [0, 1)")
        if self.campaign not in ("Peeper", "HashBench") and any(n <= 4 for n in self.presses):
            raise ConfigurationError("pairing campaigns need more than 4 presses")
        if any(n < 1 for n in self.presses):
            raise ConfigurationError("press counts must be >= 1")
        if self.devices < 2:
            raise ConfigurationError("devices must be >= 2")
        if self.campaign == "MultiDevice" and self.devices < 3:
            raise ConfigurationError("MultiDevice needs at least 3 devices")
        if not 0 <= self.failure_prob <= 1:
            raise ConfigurationError("failure_prob must lie in [0, 1]")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.campaign == "HashBench":
            bad = [a for a in self.algorithms if a.lower() not in ("md5", "sha256")]
            if bad or not self.algorithms or not self.iterations or any(i < 1 for i in self.iterations):
                raise ConfigurationError("HashBench needs algorithms in {md5, sha256} and iterations >= 1")
        try:
            self.jitter_dist()
            self.interval_dist()
            self.reaction_dist()
            self.hand_offset_dist()
        except InvalidInputError as exc:
            raise ConfigurationError(str(exc)) from None
        return self

    def jitter_dist(self) -> Distribution:
        return Distribution.parse(self.jitter)

    def interval_dist(self) -> Distribution:
        return Distribution.parse(self.interval)

    def reaction_dist(self) -> Distribution:
        return Distribution.parse(self.reaction)

    def hand_offset_dist(self) -> Optional[Distribution]:
        if not self.hand_offset:
            return None
        d = Distribution.parse(self.hand_offset)
        return Distribution(d.family, d.a, d.b, truncate=False)

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        for key, cast in (("taus", float), ("presses", int), ("faults", float), ("iterations", int)):
            if key in data:
                data[key] = parse_list(data[key], cast)
        if isinstance(data.get("algorithms"), str):
            data["algorithms"] = [a.strip() for a in data["algorithms"].split(",")]
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"bad config file {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigurationError("config file must hold a mapping")
        return cls.from_mapping(data)

    def override(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})
