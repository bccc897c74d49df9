"""File-backed persistent key store.

Append-only file of records ``[u32 length][payload][u32 crc32(payload)]``
where ``payload = u16 device_id | u16 len(session_id) | session_id | key``.
The last record for a ``(device_id, session_id)`` pair wins.
"""
from __future__ import annotations

import os
import struct
import zlib
from pathlib import Path
from typing import Dict, Iterator, Tuple

from ..errors import IntegrityError, InvalidInputError, KeyNotFoundError

KEY_LEN = 32


class KeyStore:
    def __init__(self, path):
        self.path = Path(path)

    def put(self, device_id: int, session_id: str, key: bytes) -> None:
        if len(key) != KEY_LEN:
            raise InvalidInputError(f"session keys are {KEY_LEN} bytes")
        sid = session_id.encode()
        if not 0 <= device_id <= 0xFFFF or len(sid) > 0xFFFF:
            raise InvalidInputError("device id or session id out of range")
        payload = struct.pack(">HH", device_id, len(sid)) + sid + bytes(key)
        record = struct.pack(">I", len(payload)) + payload + struct.pack(">I", zlib.crc32(payload))
        with open(self.path, "ab") as fh:
            fh.write(record)
            fh.flush()
            os.fsync(fh.fileno())

    def _records(self) -> Iterator[Tuple[int, str, bytes]]:
        data = self.path.read_bytes() if self.path.exists() else b""
        pos = 0
        while pos < len(data):
            if pos + 4 > len(data):
                raise IntegrityError(f"truncated record header at byte {pos}")
            (length,) = struct.unpack_from(">I", data, pos)
            end = pos + 4 + length + 4
            if end > len(data) or length < 4 + KEY_LEN:
                raise IntegrityError(f"truncated or malformed record at byte {pos}")
            payload = data[pos + 4:pos + 4 + length]
            (crc,) = struct.unpack_from(">I", data, pos + 4 + length)
            if zlib.crc32(payload) != crc:
                raise IntegrityError(f"checksum mismatch in record at byte {pos}")
            device_id, sid_len = struct.unpack_from(">HH", payload)
            if 4 + sid_len + KEY_LEN != length:
                raise IntegrityError(f"inconsistent record lengths at byte {pos}")
            yield device_id, payload[4:4 + sid_len].decode(), payload[4 + sid_len:]
            pos = end

    def items(self) -> Dict[Tuple[int, str], bytes]:
        return {(dev, sid): key for dev, sid, key in self._records()}

    def get(self, device_id: int, session_id: str) -> bytes:
        try:
            return self.items()[(device_id, session_id)]
        except KeyError:
            raise KeyNotFoundError(f"no key for device {device_id} session {session_id!r}") from None
