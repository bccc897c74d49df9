"""Per-device pairing state machine and a round-based message simulator.

Each device runs one :class:`PairingSession` that talks to every other
device on the same power source. Device 0 is the initiator. The exchange
runs through these phases, never skipping or revisiting one::

    SETUP -> FEATURES -> KEYS -> SYNCED -> COLLECTING -> EXCHANGED
          -> VERIFIED -> COMPLETE        (any phase may drop to ABORTED)

Pairwise roles: for the pair ``(a, b)`` with ``a < b`` device ``a`` plays
initiator and ``b`` responder, so commitments and keys are computed over
``(pk_b, pk_a, ...)`` on both sides.
"""
from __future__ import annotations

import enum
import random
import struct
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import crypto
from .errors import (ConfigurationError, InsufficientEntropyError, InvalidEventError,
                     InvalidInputError, InvalidPointError, ProtocolViolation)
from .tolerance import accept, agreed_indices, evidence_vector, group_error_rate

PROTOCOL_VERSION = 1


class Kind(enum.IntEnum):
    FEATURE_EXCHANGE = 1
    PUBLIC_KEY = 2
    SYNC_EPOCH = 3
    NONCE_REVEAL = 4
    EVIDENCE = 5
    COMMITMENT = 6
    CONFIRM = 7  # reserved, never emitted
    ABORT = 8


class Phase(enum.IntEnum):
    SETUP = 0
    FEATURES = 1
    KEYS = 2
    SYNCED = 3
    COLLECTING = 4
    EXCHANGED = 5
    VERIFIED = 6
    COMPLETE = 7
    ABORTED = 8


class Role(enum.Enum):
    INITIATOR = "initiator"
    RESPONDER = "responder"


class AbortReason(enum.IntEnum):
    PROTOCOL_VIOLATION = 1
    FAULT_TOLERANCE = 2
    AUTHENTICATION_FAILURE = 3


_FEATURE_FMT = ">BHHdd"
_FIXED_PAYLOAD = {
    Kind.FEATURE_EXCHANGE: struct.calcsize(_FEATURE_FMT),
    Kind.PUBLIC_KEY: crypto.PUBLIC_KEY_LEN,
    Kind.SYNC_EPOCH: 8,
    Kind.NONCE_REVEAL: crypto.NONCE_LEN,
    Kind.COMMITMENT: crypto.DIGEST_LEN,
    Kind.CONFIRM: 0,
    Kind.ABORT: 1,
}
_HEADER = struct.Struct(">BHI")


@dataclass(frozen=True)
class Message:
    """One protocol message.

    ``recipient`` is transport addressing (``None`` = broadcast to every
    peer) and is not part of the wire frame.
    """

    kind: Kind
    sender: int
    payload: bytes
    recipient: Optional[int] = None

    def __post_init__(self):
        expected = _FIXED_PAYLOAD.get(self.kind)
        if expected is not None and len(self.payload) != expected:
            raise InvalidInputError(f"{self.kind.name} payload must be {expected} bytes, "
                                    f"got {len(self.payload)}")
        if self.kind == Kind.EVIDENCE and (not self.payload or len(self.payload) % crypto.DIGEST_LEN):
            raise InvalidInputError("EVIDENCE payload must be a non-empty multiple of 32 bytes")
        if not 0 <= self.sender <= 0xFFFF:
            raise InvalidInputError("sender id must fit in 2 bytes")

    def encode(self) -> bytes:
        return _HEADER.pack(int(self.kind), self.sender, len(self.payload)) + self.payload

    @classmethod
    def decode(cls, frame: bytes, recipient: Optional[int] = None) -> "Message":
        if len(frame) < _HEADER.size:
            raise InvalidInputError("frame shorter than header")
        kind, sender, length = _HEADER.unpack_from(frame)
        payload = frame[_HEADER.size:]
        if len(payload) != length:
            raise InvalidInputError(f"frame declares {length} payload bytes, carries {len(payload)}")
        try:
            kind = Kind(kind)
        except ValueError:
            raise InvalidInputError(f"unknown message kind {kind}") from None
        return cls(kind, sender, bytes(payload), recipient)

    def evidence(self) -> List[bytes]:
        d = crypto.DIGEST_LEN
        return [self.payload[i:i + d] for i in range(0, len(self.payload), d)]


@dataclass(frozen=True)
class PairingConfig:
    tau_ms: float = 120.0
    fault_tolerance: float = 0.0
    presses: int = 5
    devices: int = 2

    def validate(self) -> "PairingConfig":
        if not self.tau_ms > 0:
            raise ConfigurationError(f"tau_ms must be > 0, got {self.tau_ms}")
        if not 0 <= self.fault_tolerance < 1:
            raise ConfigurationError(f"fault tolerance must lie in [0, 1), got {self.fault_tolerance}")
        if self.presses <= 4:
            raise ConfigurationError(f"pairing needs more than 4 presses, got {self.presses}")
        if not 2 <= self.devices <= 0xFFFF:
            raise ConfigurationError(f"device count must be >= 2, got {self.devices}")
        return self

    def features(self) -> bytes:
        return struct.pack(_FEATURE_FMT, PROTOCOL_VERSION, self.presses, self.devices,
                           self.tau_ms, self.fault_tolerance)


@dataclass(frozen=True)
class Reconciliation:
    epsilon: float
    agreed: List[int]
    accepted: bool

    def masked(self, ticks: Sequence[int]) -> List[int]:
        keep = set(self.agreed)
        return [t if i in keep else crypto.MASKED_TICK for i, t in enumerate(ticks, start=1)]

    def retained(self, ticks: Sequence[int]) -> List[int]:
        return [ticks[i - 1] for i in self.agreed]


def reconcile(rows: Sequence[Sequence[bytes]], phi: float) -> Reconciliation:
    """Error rate, agreed press indices and the accept decision for evidence rows."""
    eps = group_error_rate(rows)
    return Reconciliation(eps, agreed_indices(rows), accept(eps, phi))


def pair_roles(a: int, b: int) -> Tuple[int, int]:
    """``(initiator_id, responder_id)`` for a device pair."""
    return (a, b) if a < b else (b, a)


class PairingSession:
    def __init__(self, device_id: int, role: Role, config: PairingConfig, keypair: crypto.KeyPair,
                 nonce: bytes, epoch_ms: int = 0):
        config.validate()
        if (role is Role.INITIATOR) != (device_id == 0):
            raise ConfigurationError("device 0 is the initiator and only device 0")
        if not 0 <= device_id < config.devices:
            raise ConfigurationError(f"device id {device_id} outside 0..{config.devices - 1}")
        self.device_id = device_id
        self.role = role
        self.config = config
        self.keypair = keypair
        self.nonce = nonce
        self.epoch_ms = epoch_ms
        self.peers = [d for d in range(config.devices) if d != device_id]
        self.phase = Phase.SETUP
        self.history: List[Phase] = [Phase.SETUP]
        self.features_in: Dict[int, bytes] = {}
        self.peer_pks: Dict[int, bytes] = {}
        self.peer_nonces: Dict[int, bytes] = {}
        self.evidence_in: Dict[int, List[bytes]] = {}
        self.commitments_in: Dict[int, bytes] = {}
        self.recorded: List[int] = []
        self.reconciliation: Optional[Reconciliation] = None
        self.abort_reason: Optional[AbortReason] = None
        self.abort_detail = ""
        self.keys: Dict[int, bytes] = {}

    def __repr__(self):
        return f"<PairingSession dev={self.device_id} {self.phase.name}>"

    # -- bookkeeping ---------------------------------------------------------------
    def _advance(self, phase: Phase) -> None:
        if phase <= self.phase:
            raise ProtocolViolation(f"phase {phase.name} would revisit {self.phase.name}")
        self.phase = phase
        self.history.append(phase)

    def _abort(self, reason: AbortReason, detail: str, notify: bool = True) -> List[Message]:
        self.abort_reason = reason
        self.abort_detail = detail
        self.phase = Phase.ABORTED
        self.history.append(Phase.ABORTED)
        self.keypair.wipe()
        if not notify:
            return []
        return [Message(Kind.ABORT, self.device_id, bytes([int(reason)]))]

    @property
    def terminal(self) -> bool:
        return self.phase in (Phase.COMPLETE, Phase.ABORTED)

    def _check_live(self) -> None:
        if self.terminal:
            raise ProtocolViolation(f"session is {self.phase.name}; it cannot be reused")

    def public_keys(self) -> List[bytes]:
        """All participants' public keys in device-id order."""
        keys = dict(self.peer_pks)
        keys[self.device_id] = self.keypair.pk
        return [keys[d] for d in range(self.config.devices)]

    def salt(self) -> bytes:
        return crypto.session_salt(self.public_keys())

    def _pair_keys(self, peer: int) -> Tuple[bytes, bytes]:
        """``(pk_responder, pk_initiator)`` for the pair with ``peer``."""
        i, r = pair_roles(self.device_id, peer)
        pk = lambda d: self.keypair.pk if d == self.device_id else self.peer_pks[d]
        return pk(r), pk(i)

    # -- inbound -----------------------------------------------------------------------
    def start(self) -> List[Message]:
        self._check_live()
        if self.phase != Phase.SETUP:
            raise ProtocolViolation("session already started")
        self._advance(Phase.FEATURES)
        return [Message(Kind.FEATURE_EXCHANGE, self.device_id, self.config.features()),
                Message(Kind.PUBLIC_KEY, self.device_id, self.keypair.pk)]

    def handle_message(self, msg: Message) -> List[Message]:
        self._check_live()
        if msg.recipient is not None and msg.recipient != self.device_id:
            return self._abort(AbortReason.PROTOCOL_VIOLATION, "misaddressed message")
        if msg.sender not in self.peers:
            return self._abort(AbortReason.PROTOCOL_VIOLATION, f"unknown sender {msg.sender}")
        if msg.kind == Kind.ABORT:
            return self._abort(AbortReason(msg.payload[0]) if msg.payload[0] in (1, 2, 3)
                               else AbortReason.PROTOCOL_VIOLATION,
                               f"peer {msg.sender} aborted", notify=False)
        handler = {
            Kind.FEATURE_EXCHANGE: self._on_features,
            Kind.PUBLIC_KEY: self._on_public_key,
            Kind.SYNC_EPOCH: self._on_sync,
            Kind.NONCE_REVEAL: self._on_nonce,
            Kind.EVIDENCE: self._on_evidence,
            Kind.COMMITMENT: self._on_commitment,
        }.get(msg.kind)
        if handler is None:
            return self._abort(AbortReason.PROTOCOL_VIOLATION, f"unexpected {msg.kind.name}")
        return handler(msg)

    def _violation(self, msg: Message) -> List[Message]:
        return self._abort(AbortReason.PROTOCOL_VIOLATION,
                           f"{msg.kind.name} from {msg.sender} not allowed in {self.phase.name}")

    def _on_features(self, msg):
        if self.phase != Phase.FEATURES or msg.sender in self.features_in:
            return self._violation(msg)
        if msg.payload != self.config.features():
            return self._abort(AbortReason.PROTOCOL_VIOLATION, "feature/config mismatch")
        self.features_in[msg.sender] = msg.payload
        return self._maybe_keys()

    def _on_public_key(self, msg):
        if self.phase != Phase.FEATURES or msg.sender in self.peer_pks:
            return self._violation(msg)
        try:
            crypto.load_public_key(msg.payload)
        except InvalidPointError as exc:
            return self._abort(AbortReason.PROTOCOL_VIOLATION, f"invalid point: {exc}")
        self.peer_pks[msg.sender] = msg.payload
        return self._maybe_keys()

    def _maybe_keys(self):
        if len(self.features_in) < len(self.peers) or len(self.peer_pks) < len(self.peers):
            return []
        self._advance(Phase.KEYS)
        if self.role is Role.INITIATOR:
            self._advance(Phase.SYNCED)
            self._advance(Phase.COLLECTING)
            return [Message(Kind.SYNC_EPOCH, self.device_id, self.epoch_ms.to_bytes(8, "big"))]
        return []

    def _on_sync(self, msg):
        if self.phase != Phase.KEYS or msg.sender != 0:
            return self._violation(msg)
        self.epoch_ms = int.from_bytes(msg.payload, "big")
        self._advance(Phase.SYNCED)
        self._advance(Phase.COLLECTING)
        return []

    def _on_nonce(self, msg):
        if self.phase not in (Phase.COLLECTING, Phase.EXCHANGED) or msg.sender in self.peer_nonces:
            return self._violation(msg)
        self.peer_nonces[msg.sender] = msg.payload
        return self._maybe_reconcile()

    def _on_evidence(self, msg):
        if self.phase not in (Phase.COLLECTING, Phase.EXCHANGED) or msg.sender in self.evidence_in:
            return self._violation(msg)
        ev = msg.evidence()
        if len(ev) != self.config.presses:
            return self._abort(AbortReason.PROTOCOL_VIOLATION, "evidence length mismatch")
        self.evidence_in[msg.sender] = ev
        return self._maybe_reconcile()

    def _on_commitment(self, msg):
        if self.phase != Phase.EXCHANGED or msg.sender in self.commitments_in:
            return self._violation(msg)
        self.commitments_in[msg.sender] = msg.payload
        return self._maybe_verify()

    # -- association -------------------------------------------------------------------
    def record_event(self, tick: int) -> List[Message]:
        """Record the tick of one observed power loss."""
        self._check_live()
        if self.phase != Phase.COLLECTING:
            return self._abort(AbortReason.PROTOCOL_VIOLATION,
                               f"event recorded in {self.phase.name}")
        tick = int(tick)
        if tick < 0 or (self.recorded and tick <= self.recorded[-1]):
            raise InvalidEventError(f"tick {tick} does not follow {self.recorded[-1:]}")
        self.recorded.append(tick)
        if len(self.recorded) < self.config.presses:
            return []
        self._advance(Phase.EXCHANGED)
        evidence = b"".join(evidence_vector(self.recorded, self.salt()))
        out = [Message(Kind.NONCE_REVEAL, self.device_id, self.nonce),
               Message(Kind.EVIDENCE, self.device_id, evidence)]
        return out + self._maybe_reconcile()

    def own_evidence(self) -> List[bytes]:
        return evidence_vector(self.recorded, self.salt())

    def _maybe_reconcile(self):
        if (self.phase != Phase.EXCHANGED or self.reconciliation is not None
                or len(self.peer_nonces) < len(self.peers) or len(self.evidence_in) < len(self.peers)):
            return []
        rows = {d: ev for d, ev in self.evidence_in.items()}
        rows[self.device_id] = self.own_evidence()
        rec = reconcile([rows[d] for d in sorted(rows)], self.config.fault_tolerance)
        self.reconciliation = rec
        if not rec.accepted:
            return self._abort(AbortReason.FAULT_TOLERANCE,
                               f"error rate {rec.epsilon:.3f} vs fault tolerance "
                               f"{self.config.fault_tolerance:.3f}")
        if len(rec.agreed) < crypto.MIN_KEY_TICKS:
            return self._abort(AbortReason.FAULT_TOLERANCE,
                               f"insufficient entropy: {len(rec.agreed)} agreed ticks")
        masked = rec.masked(self.recorded)
        out = []
        for peer in self.peers:
            pk_r, pk_i = self._pair_keys(peer)
            c = crypto.commitment(pk_r, pk_i, self.nonce, masked)
            out.append(Message(Kind.COMMITMENT, self.device_id, c, recipient=peer))
        return out + self._maybe_verify()

    def expected_commitment(self, peer: int) -> bytes:
        pk_r, pk_i = self._pair_keys(peer)
        return crypto.commitment(pk_r, pk_i, self.peer_nonces[peer],
                                 self.reconciliation.masked(self.recorded))

    def _maybe_verify(self):
        if self.reconciliation is None or len(self.commitments_in) < len(self.peers):
            return []
        for peer in self.peers:
            if self.commitments_in[peer] != self.expected_commitment(peer):
                return self._abort(AbortReason.AUTHENTICATION_FAILURE,
                                   f"commitment from device {peer} does not verify")
        self._advance(Phase.VERIFIED)
        return []

    def finalize(self, store=None, session_label: Optional[str] = None) -> Dict[int, bytes]:
        """Derive one key per peer; optionally persist each to ``store``."""
        self._check_live()
        if self.phase != Phase.VERIFIED:
            raise ProtocolViolation(f"finalize called in {self.phase.name}")
        ticks = self.reconciliation.retained(self.recorded)
        keys = {}
        try:
            for peer in self.peers:
                i, r = pair_roles(self.device_id, peer)
                nonce = lambda d: self.nonce if d == self.device_id else self.peer_nonces[d]
                shared = crypto.dh(self.keypair.sk, self.peer_pks[peer])
                keys[peer] = crypto.derive_key(shared, ticks, nonce(r), nonce(i))
        except InsufficientEntropyError as exc:
            self._abort(AbortReason.FAULT_TOLERANCE, str(exc), notify=False)
            raise
        self.keys = keys
        self._advance(Phase.COMPLETE)
        self.keypair.wipe()
        if store is not None:
            label = session_label or self.salt()[:8].hex()
            for peer, key in keys.items():
                store.put(self.device_id, f"{label}:{peer}", key)
        return keys


def start_session(role: Role, config: PairingConfig, seed: Optional[int] = None,
                  device_id: Optional[int] = None, epoch_ms: int = 0
                  ) -> Tuple[PairingSession, List[Message]]:
    """Create a session with a fresh keypair and nonce and emit its opening messages."""
    config.validate()
    if device_id is None:
        device_id = 0 if role is Role.INITIATOR else 1
    rng = random.Random(seed) if seed is not None else None
    keypair = crypto.generate_keypair(rng.getrandbits(63) if rng else None)
    nonce = crypto.new_nonce(rng)
    session = PairingSession(device_id, role, config, keypair, nonce, epoch_ms)
    return session, session.start()


@dataclass
class PairingRun:
    sessions: List[PairingSession]
    keys: Dict[Tuple[int, int], Tuple[bytes, bytes]] = field(default_factory=dict)
    transcript: List[Tuple[Optional[int], bytes]] = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return all(s.phase == Phase.COMPLETE for s in self.sessions)

    def keys_agree(self) -> bool:
        return self.completed and all(a == b for a, b in self.keys.values())

    def abort_reasons(self) -> List[Optional[AbortReason]]:
        return [s.abort_reason for s in self.sessions]


def _deliver(sessions: Sequence[PairingSession], queue: List[Message], transcript) -> None:
    """Deliver messages round by round until no device emits anything new."""
    while queue:
        current, queue[:] = list(queue), []
        for msg in current:
            transcript.append((msg.recipient, msg.encode()))
            targets = [msg.recipient] if msg.recipient is not None else \
                [d for d in range(len(sessions)) if d != msg.sender]
            for dest in targets:
                s = sessions[dest]
                if s.terminal:
                    continue
                queue.extend(s.handle_message(msg))


def run_pairing(ticks: Sequence[Sequence[int]], config: PairingConfig, seed: int = 0,
                store=None, session_label: Optional[str] = None) -> PairingRun:
    """Pair ``len(ticks)`` co-powered devices, one recorded tick row per device."""
    from .rng import derive_seed

    config = PairingConfig(config.tau_ms, config.fault_tolerance, config.presses, len(ticks))
    config.validate()
    sessions, queue = [], []
    for dev in range(config.devices):
        role = Role.INITIATOR if dev == 0 else Role.RESPONDER
        s, out = start_session(role, config, derive_seed(seed, "session", dev), dev)
        sessions.append(s)
        queue.extend(out)
    run = PairingRun(sessions)
    _deliver(sessions, queue, run.transcript)
    for s, row in zip(sessions, ticks):
        for t in row:
            if s.terminal:
                break
            queue.extend(s.record_event(t))
    _deliver(sessions, queue, run.transcript)
    if any(s.phase != Phase.VERIFIED for s in sessions):
        return run
    for s in sessions:
        s.finalize(store, session_label)
    for a in range(config.devices):
        for b in range(a + 1, config.devices):
            run.keys[(a, b)] = (sessions[a].keys[b], sessions[b].keys[a])
    return run
