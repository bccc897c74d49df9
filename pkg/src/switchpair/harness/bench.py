"""Hash overhead micro-benchmark.

MD5 is offered only for comparison here; the protocol itself never uses it.
"""
from __future__ import annotations

import csv
import hashlib
import time
from typing import Iterable, List

import numpy as np

from ..crypto import encode_ticks
from ..errors import InvalidInputError

ALGORITHMS = {"md5": hashlib.md5, "sha256": hashlib.sha256}


def benchmark_hash(algorithm: str, timestamp_count: int, iterations: int, seed: int = 0) -> float:
    """Wall time in ms to hash ``timestamp_count`` random ticks ``iterations`` times."""
    try:
        fn = ALGORITHMS[algorithm.lower()]
    except KeyError:
        raise InvalidInputError(f"unknown hash algorithm {algorithm!r}") from None
    if timestamp_count < 1 or iterations < 1:
        raise InvalidInputError("timestamp_count and iterations must be >= 1")
    ticks = np.random.default_rng(seed).integers(0, 1 << 32, timestamp_count)
    data = encode_ticks(ticks.tolist())
    start = time.perf_counter()
    for _ in range(iterations):
        fn(data).digest()
    return (time.perf_counter() - start) * 1000.0


def bench_rows(algorithms: Iterable[str], counts: Iterable[int], iterations: Iterable[int],
               seed: int = 0) -> List[dict]:
    return [{"algorithm": a.lower(), "k": k, "iterations": it, "ms": benchmark_hash(a, k, it, seed)}
            for a in algorithms for k in counts for it in iterations]


def write_bench_csv(rows: List[dict], fh) -> None:
    w = csv.DictWriter(fh, fieldnames=["algorithm", "k", "iterations", "ms"], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**r, "ms": f"{r['ms']:.6f}"})
