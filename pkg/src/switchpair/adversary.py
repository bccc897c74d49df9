"""Attack models: guessing bound, peeping attacker, scripted man in the middle.

The passive eavesdropper who taps the power line is outside the threat
model (no physical access), so no operation simulates it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from . import crypto
from .errors import InvalidInputError
from .powerline import (DEFAULT_DELAY, HUMAN_INTERVAL_MS, DeviceProfile, Distribution, EventTrace,
                        run_trace, sample_press_schedule)
from .protocol import (Kind, Message, PairingConfig, Phase, AbortReason, Role, run_pairing,
                       start_session)
from .rng import derive_seed, stream
from .timebase import DevicePrecision

PASSKEY_SPACE = 999_999
REACTION_MEDIAN_MS = 215.0


@dataclass(frozen=True)
class GuessingParams:
    reaction_s: float
    tolerance_ms: float
    presses: int

    def __post_init__(self):
        if not (self.reaction_s > 0 and self.tolerance_ms > 0 and self.presses >= 1):
            raise InvalidInputError("guessing parameters must all be positive")


def values_per_press(reaction_s: float, tolerance_ms: float) -> int:
    """Distinct tick values an attacker must choose from per press (floored)."""
    exact = Fraction(1000) * Fraction(str(reaction_s)) / Fraction(str(tolerance_ms))
    return max(1, math.floor(exact))


def guessing_space(p: GuessingParams) -> int:
    return values_per_press(p.reaction_s, p.tolerance_ms) ** p.presses


def guessing_success_probability(p: GuessingParams) -> float:
    """One-shot guessing success, ``1 / floor(1000 * T_r / t_com) ** n``."""
    return 1.0 / guessing_space(p)


def passkey_baseline() -> float:
    """Guessing bound of a six-digit passkey, as used for comparison."""
    return 1.0 / PASSKEY_SPACE


# -- peeping attacker --------------------------------------------------------------


def reaction_model(median_ms: float = REACTION_MEDIAN_MS, sigma_log: float = 0.25) -> Distribution:
    return Distribution.lognormal(median_ms, sigma_log)


def simulate_peeper(victim: EventTrace, model: Distribution, tau_ms: float, trials: int,
                    seed: int, victim_device: int = 0) -> np.ndarray:
    """Per-attacker count of presses whose tick matches the victim's.

    Each attacker presses its own switch ``lag`` ms after seeing the user
    press, and its device quantizes that instant with the same ``tau_ms``.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    presses = np.asarray(victim.actuation_ms[victim_device])
    target = np.floor(np.asarray(victim.observed_ms[victim_device]) / tau_ms)
    lags = model.sample(stream(seed, "attacker"), trials * len(presses)).reshape(trials, len(presses))
    if np.any(lags < 0):
        raise InvalidInputError("reaction lags must be >= 0")
    attacker = np.floor((presses + lags) / tau_ms)
    return (attacker == target).sum(axis=1)


def _pdf(model: Distribution) -> Callable[[float], float]:
    a, b = model.a, model.b
    if model.family == "lognormal":
        mu = math.log(a)
        return lambda x: 0.0 if x <= 0 else math.exp(-((math.log(x) - mu) ** 2) / (2 * b * b)) / (
            x * b * math.sqrt(2 * math.pi))
    if model.family == "uniform":
        return lambda x: 1.0 / (b - a) if a <= x <= b else 0.0
    if model.family == "normal":
        mass = 1.0 - 0.5 * (1 + math.erf(-a / (b * math.sqrt(2)))) if model.truncate else 1.0
        return lambda x: 0.0 if (model.truncate and x < 0) else math.exp(-((x - a) / b) ** 2 / 2) / (
            b * math.sqrt(2 * math.pi) * mass)
    raise InvalidInputError(f"no density for {model.family}")


def peeper_match_probability(victim: EventTrace, model: Distribution, tau_ms: float,
                             victim_device: int = 0) -> float:
    """Per-press match probability averaged over presses, by numeric integration."""
    probs = []
    for p, o in zip(victim.actuation_ms[victim_device], victim.observed_ms[victim_device]):
        k = math.floor(o / tau_ms)
        lo, hi = max(0.0, k * tau_ms - p), (k + 1) * tau_ms - p
        if hi <= lo:
            probs.append(0.0)
            continue
        if model.family == "constant":
            probs.append(1.0 if lo <= model.a < hi else 0.0)
            continue
        pdf = _pdf(model)
        pts = [x for x in (model.a,) if lo < x < hi] or None
        val, _ = integrate.quad(pdf, lo, hi, points=pts, limit=200, epsabs=1e-13)
        probs.append(val)
    return float(np.mean(probs))


# -- man in the middle --------------------------------------------------------------


class MitmOutcome(enum.Enum):
    DETECTED_AT_COMMITMENT = "DetectedAtCommitment"
    SUCCEEDED = "Succeeded"


@dataclass
class AttackView:
    """What the attacker has seen when it must commit.

    ``true_ticks`` is populated only for the oracle strategy, which cheats.
    """

    config: PairingConfig
    evidence: Tuple[List[bytes], List[bytes]]
    salts: Tuple[bytes, bytes]
    interval_ms: float
    rng: np.random.Generator
    true_ticks: Optional[Tuple[List[int], List[int]]] = None
    replay_commitments: Optional[Tuple[bytes, bytes]] = None


Strategy = Callable[[AttackView], Tuple[List[int], List[int]]]


def uniform_guess(view: AttackView) -> Tuple[List[int], List[int]]:
    """Guess every tick uniformly among the values a human-paced press allows."""
    tau = view.config.tau_ms
    width = values_per_press(view.interval_ms / 1000.0, tau)
    guess = []
    for i in range(1, view.config.presses + 1):
        base = math.floor(i * view.interval_ms / tau) - width // 2
        guess.append(max(0, base) + int(view.rng.integers(width)))
    return guess, list(guess)


def oracle(view: AttackView) -> Tuple[List[int], List[int]]:
    if view.true_ticks is None:
        raise InvalidInputError("oracle strategy needs true ticks")
    return list(view.true_ticks[0]), list(view.true_ticks[1])


def _invert(evidence: Sequence[bytes], salt: bytes, bound: int) -> List[int]:
    out, start = [], 0
    for i, digest in enumerate(evidence, start=1):
        for t in range(start, bound):
            if crypto.evidence_hash(t, i, salt) == digest:
                out.append(t)
                start = t + 1
                break
        else:
            raise InvalidInputError(f"no tick below {bound} matches evidence index {i}")
    return out


def evidence_inversion(view: AttackView) -> Tuple[List[int], List[int]]:
    """Recover each victim tick by exhaustive search over the small tick space.

    A session participant knows the evidence salt, so every evidence digest
    is a one-dimensional search of at most a few thousand candidates.
    """
    bound = math.ceil(3 * view.config.presses * view.interval_ms / view.config.tau_ms) + 10
    return (_invert(view.evidence[0], view.salts[0], bound),
            _invert(view.evidence[1], view.salts[1], bound))


def replay(view: AttackView) -> Tuple[List[int], List[int]]:
    """Tick guesses are irrelevant; the attacker resends recorded commitments."""
    return uniform_guess(view)


STRATEGIES = {
    "uniform": uniform_guess,
    "oracle": oracle,
    "evidence_inversion": evidence_inversion,
    "replay": replay,
}


def honest_ticks(config: PairingConfig, seed: int, interval: Optional[Distribution] = None,
                 delay: Distribution = DEFAULT_DELAY) -> List[List[int]]:
    """Bin-centred presses seen by ``config.devices`` co-powered devices."""
    interval = interval or Distribution.normal(HUMAN_INTERVAL_MS, 500.0)
    schedule = sample_press_schedule(config.presses, interval, seed, align_tau_ms=config.tau_ms)
    profile = DeviceProfile(DevicePrecision(config.tau_ms), delay)
    return run_trace([profile] * config.devices, schedule, seed).ticks(config.tau_ms)


def _recorded_commitments(config: PairingConfig, ticks, seed: int) -> Tuple[bytes, bytes]:
    """Commitments from an earlier honest session over the very same ticks."""
    run = run_pairing(ticks, config, seed)
    sent = {}
    for _, frame in run.transcript:
        msg = Message.decode(frame)
        if msg.kind == Kind.COMMITMENT:
            sent[msg.sender] = msg.payload
    return sent[1], sent[0]


def mitm_attempt(config: PairingConfig, strategy: Strategy | str, seed: int,
                 interval_ms: float = HUMAN_INTERVAL_MS) -> MitmOutcome:
    """Interpose an attacker between an initiator A and a responder B.

    The attacker substitutes its own public keys on both links, echoes each
    victim's evidence back so the error-rate check passes, and then must
    send a commitment that verifies against the victim's own ticks.
    """
    result = mitm_session(config, strategy, seed, interval_ms)
    return result[0]


def mitm_session(config: PairingConfig, strategy: Strategy | str, seed: int,
                 interval_ms: float = HUMAN_INTERVAL_MS):
    """Like :func:`mitm_attempt` but also returns the victim sessions and attacker keys."""
    if isinstance(strategy, str):
        strategy = STRATEGIES[strategy]
    config = PairingConfig(config.tau_ms, config.fault_tolerance, config.presses, 2).validate()
    ticks = honest_ticks(config, seed)

    a, out_a = start_session(Role.INITIATOR, config, derive_seed(seed, "session", 0), 0)
    b, out_b = start_session(Role.RESPONDER, config, derive_seed(seed, "session", 1), 1)
    # the attacker impersonates device 1 towards A and device 0 towards B
    fake_b, fake_b_out = start_session(Role.RESPONDER, config, derive_seed(seed, "attacker", 1), 1)
    fake_a, fake_a_out = start_session(Role.INITIATOR, config, derive_seed(seed, "attacker", 0), 0)

    for m in fake_b_out:
        a.handle_message(m)
    for m in fake_a_out:
        b.handle_message(m)
    sync = Message(Kind.SYNC_EPOCH, 0, (0).to_bytes(8, "big"))
    b.handle_message(sync)

    emitted = {0: [], 1: []}
    for victim, row, key in ((a, ticks[0], 0), (b, ticks[1], 1)):
        for t in row:
            emitted[key].extend(victim.record_event(t))
    ev_a = next(m for m in emitted[0] if m.kind == Kind.EVIDENCE)
    ev_b = next(m for m in emitted[1] if m.kind == Kind.EVIDENCE)

    view = AttackView(config, (ev_a.evidence(), ev_b.evidence()), (a.salt(), b.salt()),
                      interval_ms, stream(seed, "attacker", 2))
    if strategy is oracle:
        view.true_ticks = (list(ticks[0]), list(ticks[1]))
    claim_a, claim_b = strategy(view)

    replayed = None
    if strategy is replay:
        replayed = _recorded_commitments(config, ticks, derive_seed(seed, "attacker", 3))

    attacker_keys = []
    for victim, fake, ev, claim, idx in ((a, fake_b, ev_a, claim_a, 0), (b, fake_a, ev_b, claim_b, 1)):
        sender = fake.device_id
        victim.handle_message(Message(Kind.NONCE_REVEAL, sender, fake.nonce))
        victim.handle_message(Message(Kind.EVIDENCE, sender, ev.payload))
        if victim.terminal:
            attacker_keys.append(None)
            continue
        pk_r, pk_i = (fake.keypair.pk, victim.keypair.pk) if idx == 0 else (victim.keypair.pk, fake.keypair.pk)
        if replayed is not None:
            c = replayed[idx]
        else:
            c = crypto.commitment(pk_r, pk_i, fake.nonce, victim.reconciliation.masked(claim))
        victim.handle_message(Message(Kind.COMMITMENT, sender, c, recipient=victim.device_id))
        if victim.phase == Phase.VERIFIED:
            r_r, r_i = (fake.nonce, victim.nonce) if idx == 0 else (victim.nonce, fake.nonce)
            shared = crypto.dh(fake.keypair.sk, victim.keypair.pk)
            attacker_keys.append(crypto.derive_key(shared, victim.reconciliation.retained(claim), r_r, r_i))
        else:
            attacker_keys.append(None)

    for victim in (a, b):
        if victim.phase == Phase.ABORTED and victim.abort_reason != AbortReason.AUTHENTICATION_FAILURE:
            raise RuntimeError(f"victim aborted for {victim.abort_reason}: {victim.abort_detail}")
    if a.phase == Phase.VERIFIED and b.phase == Phase.VERIFIED:
        a.finalize()
        b.finalize()
        return MitmOutcome.SUCCEEDED, (a, b), attacker_keys
    return MitmOutcome.DETECTED_AT_COMMITMENT, (a, b), attacker_keys
