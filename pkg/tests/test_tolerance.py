import pytest
from hypothesis import given, strategies as st

from switchpair.crypto import session_salt
from switchpair.errors import InvalidInputError
from switchpair.tolerance import (accept, agreed_indices, error_rate, evidence_vector, group_error_rate,
                                  multi_error_rate)

SALT = session_salt([b"a" * 65, b"b" * 65])
TICKS = [66, 133, 200, 266, 333]


def digests(draw_ints):
    return [bytes([v]) * 32 for v in draw_ints]


vectors = st.lists(st.integers(0, 3), min_size=1, max_size=12)


def test_evidence_vector_positional():
    a = evidence_vector(TICKS, SALT)
    other = list(TICKS)
    other[2] += 1
    b = evidence_vector(other, SALT)
    assert [i for i in range(5) if a[i] != b[i]] == [2]
    assert evidence_vector(TICKS, SALT) == a
    c = evidence_vector(TICKS, session_salt([b"c" * 65]))
    assert all(x != y for x, y in zip(a, c))


@pytest.mark.parametrize("a,b,eps", [
    ([1, 2, 3, 4], [1, 2, 3, 4], 0.0),
    ([1, 2, 3, 4], [1, 2, 9, 4], 0.25),
    ([1, 2, 3, 4, 5], [6, 7, 8, 9, 10], 1.0),
])
def test_error_rate_examples(a, b, eps):
    assert error_rate(digests(a), digests(b)) == eps


def test_error_rate_length_mismatch():
    with pytest.raises(InvalidInputError):
        error_rate(digests([1, 2]), digests([1]))


@given(vectors, st.data())
def test_error_rate_symmetric_and_identity(a, data):
    b = data.draw(st.lists(st.integers(0, 3), min_size=len(a), max_size=len(a)))
    va, vb = digests(a), digests(b)
    assert error_rate(va, vb) == error_rate(vb, va)
    assert error_rate(va, va) == 0
    k = error_rate(va, vb) * len(a)
    assert k == round(k) and 0 <= k <= len(a)


def column_scan(rows):
    """Oracle: count columns by explicit pairwise comparison."""
    n = len(rows[0])
    bad = 0
    for j in range(n):
        if any(rows[r][j] != rows[s][j] for r in range(len(rows)) for s in range(r + 1, len(rows))):
            bad += 1
    return bad / n


def test_multi_error_rate_examples():
    row = digests([1, 2, 3, 4])
    assert multi_error_rate([row, row, row]) == (0.0, True)
    wrong = digests([1, 2, 7, 4])
    assert multi_error_rate([row, wrong, row]) == (column_scan([row, wrong, row]), False) == (0.25, False)
    rows = [digests([1, 2, 3, 4]), digests([5, 6, 7, 8]), digests([9, 10, 11, 12])]
    assert multi_error_rate(rows) == (1.0, False)


def test_multi_error_rate_ragged_and_small():
    with pytest.raises(InvalidInputError):
        multi_error_rate([digests([1, 2]), digests([1]), digests([1, 2])])
    with pytest.raises(InvalidInputError):
        multi_error_rate([digests([1]), digests([1])])


@given(st.integers(3, 6), st.integers(1, 10), st.data())
def test_rank1_iff_zero_error(m, n, data):
    rows = [digests(data.draw(st.lists(st.integers(0, 2), min_size=n, max_size=n))) for _ in range(m)]
    eps, rank1 = multi_error_rate(rows)
    assert rank1 == (eps == 0)
    assert eps == column_scan(rows)
    assert len(agreed_indices(rows)) == round(n * (1 - eps))


@given(st.integers(1, 10), st.data())
def test_agreed_indices_cardinality_pairwise(n, data):
    a = digests(data.draw(st.lists(st.integers(0, 2), min_size=n, max_size=n)))
    b = digests(data.draw(st.lists(st.integers(0, 2), min_size=n, max_size=n)))
    assert len(agreed_indices([a, b])) == round(n * (1 - error_rate(a, b)))
    assert group_error_rate([a, b]) == error_rate(a, b)


def test_agreed_indices_examples():
    v = digests([1, 2, 3, 4, 5])
    assert agreed_indices([v, v]) == [1, 2, 3, 4, 5]
    assert agreed_indices([v, digests([1, 9, 3, 4, 5])]) == [1, 3, 4, 5]
    assert agreed_indices([v, digests([6, 7, 8, 9, 10])]) == []


@pytest.mark.parametrize("eps,phi,ok", [
    (0.0, 0.0, True),
    (0.2, 0.0, False),
    (0.25, 0.25, False),
    (0.2, 0.25, True),
    (0.25, 0.5, True),
])
def test_accept(eps, phi, ok):
    assert accept(eps, phi) is ok


@given(st.floats(0, 1), st.floats(0, 0.99), st.floats(0, 0.99))
def test_accept_monotone_in_phi(eps, p1, p2):
    lo, hi = sorted((p1, p2))
    assert accept(eps, lo) <= accept(eps, hi)
