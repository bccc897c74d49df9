"""Counter-based RNG stream derivation.

Every random quantity in a trial comes from ``stream(root, purpose, *keys)``,
a numpy generator seeded by ``SeedSequence(root, spawn_key=(purpose, *keys))``.
Streams for different purposes or device ids are independent, so adding a
device or an attacker never perturbs the draws of an existing stream.
"""
from __future__ import annotations

import numpy as np

PURPOSES = {
    "schedule": 1,
    "delay": 2,
    "attacker": 3,
    "failure": 4,
    "offset": 5,
    "session": 6,
    "trial": 7,
}


def stream(root_seed: int, purpose: str, *keys: int) -> np.random.Generator:
    code = PURPOSES[purpose]
    ss = np.random.SeedSequence(entropy=int(root_seed), spawn_key=(code, *map(int, keys)))
    return np.random.default_rng(ss)


def derive_seed(root_seed: int, purpose: str, *keys: int) -> int:
    """A 63-bit integer seed for consumers that want a plain int."""
    code = PURPOSES[purpose]
    ss = np.random.SeedSequence(entropy=int(root_seed), spawn_key=(code, *map(int, keys)))
    return int(ss.generate_state(1, dtype=np.uint64)[0]) >> 1
