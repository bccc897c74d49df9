import math

import pytest
from hypothesis import given, strategies as st

from switchpair.errors import InvalidInputError
from switchpair.timebase import DeviceClock, DevicePrecision, common_delay_tolerance, quantize

taus = st.floats(min_value=1.0, max_value=1000.0)
times = st.floats(min_value=0.0, max_value=1e7)


@pytest.mark.parametrize("elapsed,tau,tick", [
    (0.0, 120.0, 0),
    (8000.0, 120.0, 66),   # 66 * 120 = 7920 <= 8000 < 8040
    (50.0, 50.0, 1),
    (119.999, 120.0, 0),
])
def test_quantize_examples(elapsed, tau, tick):
    assert quantize(elapsed, tau) == tick


@pytest.mark.parametrize("bad", [-1.0, math.nan, math.inf])
def test_quantize_rejects_bad_elapsed(bad):
    with pytest.raises(InvalidInputError):
        quantize(bad, 120.0)


def test_quantize_rejects_bad_tau():
    with pytest.raises(InvalidInputError):
        quantize(10.0, 0.0)


@given(times, times, taus)
def test_quantize_monotone(a, b, tau):
    lo, hi = sorted((a, b))
    assert quantize(lo, tau) <= quantize(hi, tau)


@given(st.integers(0, 10_000), st.floats(0, 0.999), st.floats(0, 0.999), taus)
def test_same_bin_same_tick(k, u, v, tau):
    t1, t2 = (k + u) * tau, (k + v) * tau
    if not (k * tau <= t1 < (k + 1) * tau and k * tau <= t2 < (k + 1) * tau):
        return
    assert quantize(t1, tau) == quantize(t2, tau) == k


@given(times, st.floats(0, 1), taus)
def test_within_tau_differs_by_at_most_one(t, frac, tau):
    t2 = t + frac * tau * 0.999
    assert abs(quantize(t2, tau) - quantize(t, tau)) <= 1


def test_bin_edge_mismatch_exists():
    # 119 and 121 are 2 ms apart yet straddle the 120 ms boundary
    assert quantize(119.0, 120.0) != quantize(121.0, 120.0)


@pytest.mark.parametrize("values,expected", [
    ([50, 120], 120),
    ([50, 50, 50], 50),
    ([120, 140, 200], 200),
])
def test_common_delay_tolerance(values, expected):
    assert common_delay_tolerance([DevicePrecision(v) for v in values]) == expected


@given(st.lists(st.floats(min_value=0.1, max_value=1e4), min_size=2, max_size=8), st.randoms())
def test_common_delay_tolerance_properties(values, rnd):
    result = common_delay_tolerance(values)
    # exhaustive comparison oracle
    assert all(result >= v for v in values)
    assert result in values
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert common_delay_tolerance(shuffled) == result


def test_common_delay_tolerance_needs_two():
    with pytest.raises(InvalidInputError):
        common_delay_tolerance([DevicePrecision(50)])


def test_device_precision_positive():
    with pytest.raises(InvalidInputError):
        DevicePrecision(0)


def test_clock_skew():
    assert DeviceClock().tick(8000.0, 120.0) == 66
    fast = DeviceClock(epoch_ms=0.0, skew_ppm=1000.0)
    assert fast.elapsed(1000.0) == pytest.approx(1001.0)
