"""Deterministic academic-credential ledger: contract state machines, a
content-addressed document store and chain-of-trust verification."""

from blockmedc.config import Config, load_config
from blockmedc.crypto import Address, KeyPair, compute_cid, digest, generate_account, sign, verify
from blockmedc.errors import Revert
from blockmedc.ledger import DEPLOY, Event, Ledger, Receipt, Transaction

__version__ = "0.1.0"

__all__ = [
    "Address",
    "Config",
    "DEPLOY",
    "Event",
    "KeyPair",
    "Ledger",
    "Receipt",
    "Revert",
    "Transaction",
    "compute_cid",
    "digest",
    "generate_account",
    "load_config",
    "sign",
    "verify",
]
