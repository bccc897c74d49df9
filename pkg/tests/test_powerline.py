import csv

import numpy as np
import pytest

from switchpair.errors import InvalidInputError, PreconditionError
from switchpair.powerline import (DeviceProfile, Distribution, PressSchedule, observe, run_trace,
                                  sample_press_schedule)
from switchpair.timebase import DevicePrecision, quantize


def test_constant_schedule():
    s = sample_press_schedule(5, Distribution.constant(8000), seed=1)
    assert s.press_times_ms == (8000, 16000, 24000, 32000, 40000)


def test_normal_schedule_deterministic_and_bounded():
    model = Distribution.normal(8000, 500)
    s1 = sample_press_schedule(5, model, seed=7)
    s2 = sample_press_schedule(5, model, seed=7)
    assert s1 == s2
    gaps = np.diff((0.0,) + s1.press_times_ms)
    assert np.all(np.abs(gaps - 8000) <= 6 * 500)


def test_four_presses_rejected():
    with pytest.raises(PreconditionError):
        sample_press_schedule(4, Distribution.constant(8000), seed=0)


def test_bin_centre_alignment():
    s = sample_press_schedule(6, Distribution.normal(8000, 500), seed=3, align_tau_ms=120)
    for t in s.press_times_ms:
        assert (t / 120) % 1 == pytest.approx(0.5)


def test_schedule_must_increase():
    with pytest.raises(InvalidInputError):
        PressSchedule((1.0, 1.0, 2.0))


@pytest.mark.parametrize("text,expected", [
    ("uniform:0,30", Distribution.uniform(0, 30)),
    ("const:0", Distribution.constant(0)),
    ("normal:8000,500", Distribution.normal(8000, 500)),
    ("lognormal:215,0.25", Distribution.lognormal(215, 0.25)),
])
def test_parse_distribution(text, expected):
    assert Distribution.parse(text) == expected


@pytest.mark.parametrize("text", ["uniform:30", "gamma:1,2", "uniform:5,1", "normal:a,b"])
def test_parse_distribution_rejects(text):
    with pytest.raises(InvalidInputError):
        Distribution.parse(text)


def test_truncated_normal_nonnegative():
    x = Distribution.normal(5, 50).sample(np.random.default_rng(0), 10_000)
    assert x.min() >= 0


SCHEDULE = sample_press_schedule(5, Distribution.constant(8000), seed=0)


def test_zero_delay_identity():
    prof = DeviceProfile(delay=Distribution.constant(0))
    assert observe(prof, SCHEDULE, seed=1) == list(SCHEDULE.press_times_ms)


def test_constant_delay_shift():
    prof = DeviceProfile(delay=Distribution.constant(30))
    assert observe(prof, SCHEDULE, seed=1) == [t + 30 for t in SCHEDULE.press_times_ms]


def test_uniform_jitter_stays_within_tau():
    prof = DeviceProfile(DevicePrecision(120), Distribution.uniform(0, 30))
    worst = 0.0
    for seed in range(2000):
        tr = run_trace([prof, prof], SCHEDULE, seed)
        worst = max(worst, max(abs(a - b) for a, b in zip(*tr.observed_ms)))
    assert worst <= 30 < 120


def test_causality_and_row_shape():
    prof = DeviceProfile(delay=Distribution.normal(20, 40))
    tr = run_trace([prof] * 3, SCHEDULE, 9)
    for row in tr.observed_ms:
        assert len(row) == 5
        assert all(o >= p for o, p in zip(row, SCHEDULE.press_times_ms))
        assert all(b > a for a, b in zip(row, row[1:]))


def test_identical_zero_delay_rows():
    prof = DeviceProfile(delay=Distribution.constant(0))
    tr = run_trace([prof, prof], SCHEDULE, 5)
    assert tr.observed_ms[0] == tr.observed_ms[1]


def test_trace_replay():
    prof = DeviceProfile()
    assert run_trace([prof] * 3, SCHEDULE, 42) == run_trace([prof] * 3, SCHEDULE, 42)


def test_adding_device_keeps_existing_rows():
    prof = DeviceProfile()
    two = run_trace([prof] * 2, SCHEDULE, 11)
    three = run_trace([prof] * 3, SCHEDULE, 11)
    assert three.observed_ms[:2] == two.observed_ms


def test_wide_jitter_causes_tick_disagreement():
    prof = DeviceProfile(DevicePrecision(120), Distribution.uniform(0, 200))
    sched = sample_press_schedule(100, Distribution.normal(8000, 500), seed=2)
    tr = run_trace([prof, prof], sched, 2)
    # brute-force bin comparison
    disagreements = sum(quantize(a, 120) != quantize(b, 120) for a, b in zip(*tr.observed_ms))
    assert disagreements > 0
    assert tr.ticks(120)[0] != tr.ticks(120)[1]


def test_single_device_rejected():
    with pytest.raises(InvalidInputError):
        run_trace([DeviceProfile()], SCHEDULE, 0)


def test_separate_sources_offset():
    prof = DeviceProfile(delay=Distribution.constant(0))
    tr = run_trace([prof, prof], SCHEDULE, 4, hand_offset=Distribution.normal(0, 150, truncate=False))
    assert tr.actuation_ms[0] == list(SCHEDULE.press_times_ms)
    assert tr.actuation_ms[1] != tr.actuation_ms[0]
    assert tr.observed_ms[1] == tr.actuation_ms[1]


def test_failure_probability_adds_reboot_lag():
    prof = DeviceProfile(delay=Distribution.constant(0), failure_prob=1.0, reboot_penalty_ms=500)
    assert observe(prof, SCHEDULE, 0) == [t + 500 for t in SCHEDULE.press_times_ms]


def test_trace_csv(tmp_path):
    tr = run_trace([DeviceProfile(delay=Distribution.constant(30))] * 2, SCHEDULE, 0)
    path = tmp_path / "trace.csv"
    tr.write_csv(path, 120)
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0]) == ["device_id", "press_index", "press_ms", "observed_ms", "tick"]
    assert len(rows) == 10
    assert rows[0]["tick"] == str(quantize(8030, 120))
