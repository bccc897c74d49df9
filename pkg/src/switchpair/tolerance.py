"""Evidence vectors, error rates and the fault-tolerance decision.

Indices are 1-based throughout, matching press numbering. Two digests
"disagree" when they are unequal; there is no bitwise XOR of digests.
"""
from __future__ import annotations

from typing import List, Sequence

from .crypto import evidence_hash
from .errors import InvalidInputError

EvidenceVector = List[bytes]


def evidence_vector(ticks: Sequence[int], salt: bytes) -> EvidenceVector:
    return [evidence_hash(t, i, salt) for i, t in enumerate(ticks, start=1)]


def error_rate(a: Sequence[bytes], b: Sequence[bytes]) -> float:
    if len(a) != len(b):
        raise InvalidInputError(f"evidence length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise InvalidInputError("empty evidence vector")
    return sum(x != y for x, y in zip(a, b)) / len(a)


def _check_rectangular(rows: Sequence[Sequence[bytes]]) -> int:
    if not rows:
        raise InvalidInputError("empty evidence matrix")
    n = len(rows[0])
    if n == 0 or any(len(r) != n for r in rows):
        raise InvalidInputError("evidence matrix is ragged or empty")
    return n


def multi_error_rate(rows: Sequence[Sequence[bytes]]) -> tuple:
    """Return ``(error_rate, rank1)`` for a device-by-press digest matrix.

    A column is in error when any two devices disagree on it; ``rank1``
    holds iff no column is in error.
    """
    if len(rows) < 3:
        raise InvalidInputError("the multi-device path needs more than 2 devices")
    n = _check_rectangular(rows)
    bad = sum(len(set(col)) > 1 for col in zip(*rows))
    return bad / n, bad == 0


def group_error_rate(rows: Sequence[Sequence[bytes]]) -> float:
    """Error rate for any number of devices >= 2."""
    if len(rows) == 2:
        return error_rate(rows[0], rows[1])
    return multi_error_rate(rows)[0]


def agreed_indices(vectors: Sequence[Sequence[bytes]]) -> List[int]:
    n = _check_rectangular(vectors)
    return [i for i in range(1, n + 1) if len({v[i - 1] for v in vectors}) == 1]


def accept(epsilon: float, phi: float) -> bool:
    """Fault-tolerance gate: ``epsilon < phi``; at ``phi == 0`` only a clean run passes."""
    if phi == 0:
        return epsilon == 0
    return epsilon < phi
