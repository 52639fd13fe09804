"""Canonical byte serialization and digests.

Every hashed structure in the system (blocks, models, ciphertexts) is
reduced to bytes through one type-tagged encoding so digests are
bit-identical across runs and platforms:

    integers  -> tag 'I' + 8-byte big-endian (unsigned)
    floats    -> tag 'F' + 8-byte little-endian IEEE-754
    strings   -> tag 'S' + 8-byte big-endian length + UTF-8 bytes
    bytes     -> tag 'B' + 8-byte big-endian length + raw bytes
    sequences -> tag 'L' + 8-byte big-endian count + encoded items

Type tags prevent cross-type collisions (e.g. the int 65 vs the one-byte
string "A"); length prefixes prevent boundary confusion in nested lists.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Any

DIGEST_SIZE = 32
ZERO_DIGEST = b"\x00" * DIGEST_SIZE


def encode_uint(value: int) -> bytes:
    if value < 0:
        raise ValueError(f"canonical unsigned int cannot be negative: {value}")
    return b"I" + value.to_bytes(8, "big")


def encode_float(value: float) -> bytes:
    return b"F" + struct.pack("<d", value)


def encode_str(value: str) -> bytes:
    raw = value.encode("utf-8")
    return b"S" + len(raw).to_bytes(8, "big") + raw


def encode_bytes(value: bytes) -> bytes:
    return b"B" + len(value).to_bytes(8, "big") + value


def canonical_bytes(obj: Any) -> bytes:
    """Encode a nested structure of int/float/str/bytes/list/tuple."""
    if isinstance(obj, bool):
        return encode_uint(int(obj))
    if isinstance(obj, int):
        return encode_uint(obj)
    if isinstance(obj, float):
        return encode_float(obj)
    if isinstance(obj, str):
        return encode_str(obj)
    if isinstance(obj, (bytes, bytearray)):
        return encode_bytes(bytes(obj))
    if isinstance(obj, (list, tuple)):
        parts = [b"L", len(obj).to_bytes(8, "big")]
        parts.extend(canonical_bytes(item) for item in obj)
        return b"".join(parts)
    raise TypeError(f"cannot canonically encode {type(obj).__name__}")


def digest(obj: Any) -> bytes:
    """32-byte SHA-256 digest of the canonical encoding of ``obj``."""
    return hashlib.sha256(canonical_bytes(obj)).digest()
