"""Digests, deterministic accounts, Ed25519 signatures and content identifiers."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

SCHEME_ID = "ed25519"
DIGEST_SIZE = 32
ADDRESS_SIZE = 20
SIGNATURE_SIZE = 64


class EmptySeed(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Address:
    """A 20-byte account or contract identifier."""

    raw: bytes

    def __post_init__(self):
        if not isinstance(self.raw, bytes) or len(self.raw) != ADDRESS_SIZE:
            raise ValueError(f"address must be exactly {ADDRESS_SIZE} bytes")

    @classmethod
    def from_hex(cls, text: str) -> Address:
        body = text[2:] if text[:2].lower() == "0x" else text
        if len(body) != 2 * ADDRESS_SIZE:
            raise ValueError(f"bad address literal {text!r}")
        return cls(bytes.fromhex(body))

    @property
    def hex(self) -> str:
        return "0x" + self.raw.hex()

    def __str__(self) -> str:
        return self.hex

    def __repr__(self) -> str:
        return f"Address({self.hex})"


def digest(content: bytes) -> bytes:
    return hashlib.sha256(content).digest()


def trunc20(d: bytes) -> Address:
    return Address(d[:ADDRESS_SIZE])


@dataclass(frozen=True)
class KeyPair:
    secret: bytes
    public_key: bytes

    @property
    def address(self) -> Address:
        return address_of(self.public_key)

    def _private(self) -> Ed25519PrivateKey:
        return Ed25519PrivateKey.from_private_bytes(self.secret)


def address_of(public_key: bytes) -> Address:
    return trunc20(digest(public_key))


def generate_account(seed: bytes) -> tuple[Address, KeyPair]:
    """Derive an account deterministically; the same seed always yields the same pair."""
    if not seed:
        raise EmptySeed("seed must be non-empty")
    secret = digest(b"blockmedc/account/" + seed)
    sk = Ed25519PrivateKey.from_private_bytes(secret)
    pk = sk.public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw
    )
    pair = KeyPair(secret=secret, public_key=pk)
    return pair.address, pair


def sign(key: KeyPair, d: bytes) -> bytes:
    # Ed25519 signatures are deterministic by construction
    return key._private().sign(d)


def verify(public_key: bytes, d: bytes, signature: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, d)
    except (InvalidSignature, ValueError, TypeError):
        return False
    return True


def compute_cid(content: bytes) -> str:
    return digest(content).hex()
