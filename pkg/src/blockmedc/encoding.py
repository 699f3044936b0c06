"""Canonical byte encoding, gas word counting and JSON rendering of ledger values.

Every value stored in contract state, passed as a transaction argument or emitted
in an event goes through :func:`encode`.  The encoding is type-tagged and
length-prefixed so that two distinct values never share a byte string.
"""

from __future__ import annotations

import dataclasses
import struct
from decimal import Decimal
from enum import Enum
from typing import Any

from blockmedc.crypto import Address

WORD = 32


def _int_bytes(n: int) -> bytes:
    size = max(1, (n.bit_length() + 8) // 8)
    return n.to_bytes(size, "big", signed=True)


def encode(value: Any) -> bytes:
    if value is None:
        return b"N"
    if isinstance(value, Enum):
        return encode(value.value)
    if isinstance(value, bool):
        return b"T" if value else b"F"
    if isinstance(value, int):
        raw = _int_bytes(value)
        return b"I" + bytes([len(raw)]) + raw
    if isinstance(value, str):
        raw = value.encode("utf-8")
        return b"S" + struct.pack(">I", len(raw)) + raw
    if isinstance(value, (bytes, bytearray)):
        return b"B" + struct.pack(">I", len(value)) + bytes(value)
    if isinstance(value, Address):
        return b"A" + value.raw
    if isinstance(value, Decimal):
        raw = str(value).encode("ascii")
        return b"Q" + struct.pack(">I", len(raw)) + raw
    if isinstance(value, (tuple, list)):
        return b"L" + struct.pack(">I", len(value)) + b"".join(encode(v) for v in value)
    if isinstance(value, (set, frozenset)):
        items = sorted(encode(v) for v in value)
        return b"E" + struct.pack(">I", len(items)) + b"".join(items)
    if isinstance(value, dict):
        pairs = sorted((encode(k), encode(v)) for k, v in value.items())
        return b"D" + struct.pack(">I", len(pairs)) + b"".join(k + v for k, v in pairs)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        fields = tuple(getattr(value, f.name) for f in dataclasses.fields(value))
        return b"R" + encode(type(value).__name__) + encode(fields)
    raise TypeError(f"cannot canonically encode {type(value).__name__}")


def words(value: Any) -> int:
    """Number of 32-byte words the canonical encoding of ``value`` occupies (at least 1)."""
    n = len(encode(value))
    return max(1, -(-n // WORD))


def render(value: Any) -> Any:
    """JSON rendering used by the ledger export: scalars become strings, hex is 0x-lowercase."""
    if value is None:
        return None
    if isinstance(value, Enum):
        return render(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, Decimal)):
        return str(value)
    if isinstance(value, str):
        return value
    if isinstance(value, Address):
        return value.hex
    if isinstance(value, (bytes, bytearray)):
        return "0x" + bytes(value).hex()
    if isinstance(value, (tuple, list)):
        return [render(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(render(v) for v in value)
    if isinstance(value, dict):
        return {str(render(k)): render(v) for k, v in value.items()}
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: render(getattr(value, f.name)) for f in dataclasses.fields(value)}
    raise TypeError(f"cannot render {type(value).__name__}")


def pad32(text: str) -> bytes:
    """UTF-8 text right-padded with zero bytes to a fixed 32-byte field."""
    raw = text.encode("utf-8")
    if len(raw) > WORD:
        raise ValueError(f"{text!r} does not fit in 32 bytes")
    return raw.ljust(WORD, b"\x00")


def unpad32(raw: bytes) -> str:
    return raw.rstrip(b"\x00").decode("utf-8")


def u64(n: int) -> bytes:
    return n.to_bytes(8, "big")
