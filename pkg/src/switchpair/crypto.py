"""Key agreement, commitment, evidence hash and key derivation.

The commitment function, the evidence hash and the key-derivation function
are all SHA-256 behind distinct four-byte domain tags, so the same byte
stream fed to two of them can never produce the same digest input.

Canonical encoding: every field is prefixed with its byte length as a
4-byte big-endian integer; a tick sequence is one field holding 8-byte
big-endian ticks in index order.
"""
from __future__ import annotations

import hashlib
import random
import secrets
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from cryptography.hazmat.primitives.asymmetric import ec

from .errors import InsufficientEntropyError, InvalidInputError, InvalidPointError, PreconditionError

CURVE = ec.SECP256R1()
CURVE_ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
PUBLIC_KEY_LEN = 65
NONCE_LEN = 16
DIGEST_LEN = 32

TAG_COMMIT = b"SPF1"
TAG_EVIDENCE = b"SPH1"
TAG_KDF = b"SPP1"
TAG_SALT = b"SPS1"
TAG_KEYGEN = b"SPK1"

MIN_COMMIT_TICKS = 5
MIN_KEY_TICKS = 4
# Placeholder for indices dropped by fault tolerance; never a real tick.
MASKED_TICK = (1 << 64) - 1


@dataclass
class KeyPair:
    sk: bytearray
    pk: bytes

    def wipe(self) -> None:
        for i in range(len(self.sk)):
            self.sk[i] = 0


def _scalar_from_seed(seed: int) -> int:
    counter = 0
    while True:
        h = hashlib.sha256(TAG_KEYGEN + int(seed).to_bytes(16, "big", signed=True)
                           + counter.to_bytes(4, "big")).digest()
        d = int.from_bytes(h, "big")
        if 1 <= d < CURVE_ORDER:
            return d
        counter += 1


def _encode_pk(private_key: ec.EllipticCurvePrivateKey) -> bytes:
    nums = private_key.public_key().public_numbers()
    return b"\x04" + nums.x.to_bytes(32, "big") + nums.y.to_bytes(32, "big")


def generate_keypair(seed: Optional[int] = None) -> KeyPair:
    """P-256 keypair; ``seed`` makes generation deterministic (tests only)."""
    if seed is None:
        private_key = ec.generate_private_key(CURVE)
    else:
        private_key = ec.derive_private_key(_scalar_from_seed(seed), CURVE)
    d = private_key.private_numbers().private_value
    return KeyPair(bytearray(d.to_bytes(32, "big")), _encode_pk(private_key))


def load_public_key(pk: bytes) -> ec.EllipticCurvePublicKey:
    if len(pk) != PUBLIC_KEY_LEN or pk[0] != 4:
        raise InvalidPointError("public key must be a 65-byte uncompressed point")
    try:
        return ec.EllipticCurvePublicKey.from_encoded_point(CURVE, bytes(pk))
    except ValueError as exc:
        raise InvalidPointError(str(exc)) from None


def is_on_curve(pk: bytes) -> bool:
    try:
        load_public_key(pk)
    except InvalidPointError:
        return False
    return True


def dh(sk: bytes, pk: bytes) -> bytes:
    """ECDH shared secret (32-byte x coordinate)."""
    d = int.from_bytes(sk, "big")
    if not 1 <= d < CURVE_ORDER:
        raise InvalidInputError("private scalar out of range (wiped key?)")
    private_key = ec.derive_private_key(d, CURVE)
    return private_key.exchange(ec.ECDH(), load_public_key(pk))


def new_nonce(rng: Optional[random.Random] = None) -> bytes:
    if rng is None:
        return secrets.token_bytes(NONCE_LEN)
    return rng.randbytes(NONCE_LEN)


def _field(data: bytes) -> bytes:
    return len(data).to_bytes(4, "big") + data


def encode_ticks(ticks: Iterable[int]) -> bytes:
    out = bytearray()
    for t in ticks:
        t = int(t)
        if not 0 <= t <= MASKED_TICK:
            raise InvalidInputError(f"tick {t} does not fit in 8 bytes")
        out += t.to_bytes(8, "big")
    return bytes(out)


def _check_len(name: str, data: bytes, size: int) -> None:
    if len(data) != size:
        raise InvalidInputError(f"{name} must be {size} bytes, got {len(data)}")


def commitment(pk_r: bytes, pk_i: bytes, nonce: bytes, ticks: Sequence[int]) -> bytes:
    """Commitment over (responder key, initiator key, nonce, tick sequence)."""
    if len(ticks) < MIN_COMMIT_TICKS:
        raise PreconditionError(f"commitment needs more than 4 ticks, got {len(ticks)}")
    _check_len("nonce", nonce, NONCE_LEN)
    body = TAG_COMMIT + _field(pk_r) + _field(pk_i) + _field(nonce) + _field(encode_ticks(ticks))
    return hashlib.sha256(body).digest()


def session_salt(public_keys: Sequence[bytes]) -> bytes:
    """Evidence salt, bound to every participant's public key in device-id order."""
    return hashlib.sha256(TAG_SALT + b"".join(_field(pk) for pk in public_keys)).digest()


def evidence_hash(tick: int, index: int, salt: bytes) -> bytes:
    body = TAG_EVIDENCE + _field(salt) + int(index).to_bytes(4, "big") + encode_ticks([tick])
    return hashlib.sha256(body).digest()


def derive_key(dhkey: bytes, ticks: Sequence[int], r_r: bytes, r_i: bytes) -> bytes:
    """Session key from (DH secret, agreed ticks, responder nonce, initiator nonce)."""
    if len(ticks) < MIN_KEY_TICKS:
        raise InsufficientEntropyError(
            f"only {len(ticks)} agreed ticks retained, need at least {MIN_KEY_TICKS}")
    _check_len("r_r", r_r, NONCE_LEN)
    _check_len("r_i", r_i, NONCE_LEN)
    body = TAG_KDF + _field(dhkey) + _field(encode_ticks(ticks)) + _field(r_r) + _field(r_i)
    return hashlib.sha256(body).digest()
