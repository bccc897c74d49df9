from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from switchpair.adversary import (GuessingParams, MitmOutcome, guessing_space, guessing_success_probability,
                                  mitm_attempt, mitm_session, passkey_baseline, peeper_match_probability,
                                  reaction_model, simulate_peeper, values_per_press)
from switchpair.errors import InvalidInputError
from switchpair.powerline import DeviceProfile, Distribution, run_trace, sample_press_schedule
from switchpair.protocol import AbortReason, PairingConfig


def test_reference_guessing_value():
    p = GuessingParams(8, 120, 4)
    assert values_per_press(8, 120) == 66
    assert guessing_space(p) == 18_974_736
    assert guessing_success_probability(p) == pytest.approx(5.27e-8, rel=1e-3)


def test_single_press():
    assert guessing_success_probability(GuessingParams(8, 120, 1)) == 1 / 66


def test_exponent_law():
    assert Fraction(1, guessing_space(GuessingParams(8, 120, 8))) == Fraction(1, 66 ** 4) ** 2


def test_unfloored_value_differs():
    # the literal expression without flooring gives 1/19,753,086
    assert round((1000 * 8 / 120) ** 4) == 19_753_086


def test_passkey_comparison():
    assert passkey_baseline() == 1 / 999_999
    assert guessing_success_probability(GuessingParams(8, 120, 4)) < passkey_baseline()
    assert 66 ** 3 == 287_496
    assert guessing_success_probability(GuessingParams(8, 120, 3)) > passkey_baseline()


@pytest.mark.parametrize("args", [(0, 120, 4), (8, 0, 4), (8, 120, 0), (-1, 120, 4)])
def test_guessing_params_validated(args):
    with pytest.raises(InvalidInputError):
        GuessingParams(*args)


@given(st.integers(1, 12))
def test_guessing_strictly_decreasing_in_n(n):
    p1 = guessing_success_probability(GuessingParams(8, 120, n))
    p2 = guessing_success_probability(GuessingParams(8, 120, n + 1))
    assert p2 < p1


def test_guessing_increasing_in_tolerance():
    probs = [guessing_success_probability(GuessingParams(8, t, 4)) for t in (40, 80, 120, 160, 200)]
    assert all(a < b for a, b in zip(probs, probs[1:]))


def victim(n=4, tau=120, align=False, seed=0):
    sched = sample_press_schedule(n, Distribution.normal(8000, 500), seed,
                                  align_tau_ms=tau if align else None, min_presses=1)
    prof = DeviceProfile(delay=Distribution.uniform(0, 30))
    return run_trace([prof, prof], sched, seed)


def test_zero_lag_peeper_matches_everything():
    tr = run_trace([DeviceProfile(delay=Distribution.constant(0))] * 2,
                   sample_press_schedule(4, Distribution.normal(8000, 500), 0, min_presses=1), 0)
    counts = simulate_peeper(tr, Distribution.constant(0), 120, 50, seed=1)
    assert np.all(counts == 4)


def test_hopeless_peeper():
    counts = simulate_peeper(victim(), Distribution.constant(1200), 120, 50, seed=1)
    assert np.all(counts == 0)


def test_peeper_deterministic():
    tr = victim()
    a = simulate_peeper(tr, reaction_model(), 120, 100, seed=5)
    b = simulate_peeper(tr, reaction_model(), 120, 100, seed=5)
    assert np.array_equal(a, b)


def test_peeper_needs_trials():
    with pytest.raises(InvalidInputError):
        simulate_peeper(victim(), reaction_model(), 120, 0, seed=1)


@pytest.mark.parametrize("model", [
    Distribution.lognormal(100, 0.5),
    Distribution.uniform(0, 150),
    Distribution.normal(60, 40),
])
def test_peeper_mc_matches_integration(model):
    tr = victim(n=6, seed=3)
    trials = 20_000
    counts = simulate_peeper(tr, model, 120, trials, seed=11)
    p = peeper_match_probability(tr, model, 120)
    total = trials * 6
    sigma = math.sqrt(total * p * (1 - p))
    assert abs(counts.sum() - total * p) <= 3 * sigma + 1


def test_mitm_uniform_guess_detected():
    cfg = PairingConfig()
    outcomes = {mitm_attempt(cfg, "uniform", s) for s in range(300)}
    assert outcomes == {MitmOutcome.DETECTED_AT_COMMITMENT}


def test_mitm_oracle_succeeds_and_shares_keys():
    outcome, (a, b), attacker_keys = mitm_session(PairingConfig(), "oracle", 4)
    assert outcome == MitmOutcome.SUCCEEDED
    assert attacker_keys[0] == a.keys[1] and attacker_keys[1] == b.keys[0]


def test_mitm_replay_detected():
    outcome, (a, b), _ = mitm_session(PairingConfig(), "replay", 4)
    assert outcome == MitmOutcome.DETECTED_AT_COMMITMENT
    assert a.abort_reason == b.abort_reason == AbortReason.AUTHENTICATION_FAILURE


def test_mitm_evidence_inversion_succeeds():
    """Known limitation: a relaying attacker can invert the per-press evidence digests."""
    assert mitm_attempt(PairingConfig(), "evidence_inversion", 6) == MitmOutcome.SUCCEEDED
