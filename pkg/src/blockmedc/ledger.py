"""Serial, append-only ledger executing contract state machines with gas metering."""

from __future__ import annotations

import inspect
import json
import threading
from dataclasses import dataclass, field
from typing import Any, ClassVar, Iterable, NoReturn

from blockmedc.crypto import Address, digest, trunc20
from blockmedc.encoding import encode, render, u64, words
from blockmedc.errors import (
    ArityMismatch,
    BadNonce,
    BadTimestamp,
    ContractDestroyed,
    Revert,
    UnknownContract,
    UnknownKind,
    UnknownOperation,
)
from blockmedc.gas import GasMeter, GasSchedule

DEPLOY = "DEPLOY"
_MISSING = object()


@dataclass(frozen=True)
class Transaction:
    sender: Address
    target: Address | str
    operation: str
    args: tuple
    timestamp: int
    nonce: int

    def encode(self) -> bytes:
        target = self.target if isinstance(self.target, Address) else str(self.target)
        return encode(
            ("tx", self.sender, target, self.operation, tuple(self.args), self.timestamp, self.nonce)
        )

    @property
    def hash(self) -> bytes:
        return digest(self.encode())


@dataclass(frozen=True)
class Event:
    contract: Address
    name: str
    args: tuple[tuple[str, Any], ...]
    date: int

    def __getitem__(self, key: str) -> Any:
        for k, v in self.args:
            if k == key:
                return v
        raise KeyError(key)

    def to_json(self) -> dict:
        return {
            "contract": self.contract.hex,
            "name": self.name,
            "args": {k: render(v) for k, v in self.args},
            "date": self.date,
        }


@dataclass(frozen=True)
class Receipt:
    tx_hash: bytes
    status: str
    revert_reason: str | None
    gas_used: int
    events: tuple[Event, ...]
    created_contract: Address | None = None
    return_value: Any = field(default=None, compare=False)
    # (address, kind, gas) for contracts created inside this transaction
    creations: tuple = field(default=(), compare=False)
    counters: dict = field(default_factory=dict, compare=False)

    @property
    def ok(self) -> bool:
        return self.status == "Success"

    def to_json(self) -> dict:
        status = "Success" if self.ok else f"Reverted:{self.revert_reason}"
        return {
            "txHash": "0x" + self.tx_hash.hex(),
            "status": status,
            "gasUsed": self.gas_used,
            "createdContract": self.created_contract.hex if self.created_contract else None,
            "events": [e.to_json() for e in self.events],
        }


def external(fn):
    fn._blockmedc_entry = "external"
    return fn


def view(fn):
    fn._blockmedc_entry = "view"
    return fn


def entry_kind(contract_cls: type, name: str) -> str | None:
    fn = getattr(contract_cls, name, None)
    return getattr(fn, "_blockmedc_entry", None)


def _bind(fn, args: tuple, kwargs: dict | None = None) -> tuple:
    sig = inspect.signature(fn)
    params = list(sig.parameters.values())[2:]  # drop self, ctx
    try:
        bound = inspect.Signature(params).bind(*args, **(kwargs or {}))
    except TypeError as exc:
        raise ArityMismatch(f"{fn.__qualname__}: {exc}") from None
    bound.apply_defaults()
    return tuple(bound.arguments.values())


class Contract:
    """Base class for state machines.  All state lives in the ledger's journaled store."""

    kind: ClassVar[str] = ""
    # approximate code size; deployment is charged per code word
    code_words: ClassVar[int] = 1

    def __init__(self, ledger: Ledger, address: Address):
        self._ledger = ledger
        self.address = address

    def constructor(self, ctx: Context) -> None:
        pass

    # storage primitives, metered inside transactions
    def get(self, key, default=None):
        value = self._ledger._read(self.address, key)
        return default if value is _MISSING else value

    def has(self, key) -> bool:
        return self._ledger._read(self.address, key) is not _MISSING

    def set(self, key, value) -> None:
        self._ledger._write(self.address, key, value)

    def delete(self, key) -> None:
        self._ledger._write(self.address, key, _MISSING)

    # append-only arrays stored as (name, i) plus a length slot
    def push(self, name: str, value) -> int:
        n = self.get((name, "len"), 0)
        self.set((name, n), value)
        self.set((name, "len"), n + 1)
        return n

    def length(self, name: str) -> int:
        return self.get((name, "len"), 0)

    def items(self, name: str) -> list:
        return [self.get((name, i)) for i in range(self.length(name))]


@dataclass
class Context:
    ledger: Ledger
    sender: Address
    contract: Address
    now: int

    @property
    def policy(self):
        return self.ledger.policy

    @property
    def cas(self):
        return self.ledger.cas

    def revert(self, reason: str) -> NoReturn:
        raise Revert(reason)

    def require(self, cond: bool, reason: str) -> None:
        if not cond:
            raise Revert(reason)

    def emit(self, name: str, **args) -> None:
        self.ledger._emit(Event(self.contract, name, tuple(args.items()), self.now))

    def call(self, target: Address, method: str, *args, **kwargs):
        return self.ledger._internal_call(self, target, method, args, kwargs)

    def create(self, kind: str, *ctor_args) -> Address:
        return self.ledger._create(self, self.contract, kind, ctor_args)

    def kind_of(self, address: Address) -> str | None:
        return self.ledger._kind_of(address)

    def is_destroyed(self, address: Address) -> bool:
        return self.ledger._is_destroyed(address)

    def destroy(self) -> None:
        self.ledger._destroy(self.contract, self.sender, self.now)

    def charge_cas(self, n_bytes: int) -> None:
        if self.ledger._meter is not None:
            self.ledger._meter.cas_bytes += n_bytes


@dataclass(frozen=True)
class Tombstone:
    destroyed_at: int
    destroyed_by: Address


class Ledger:
    """Flat receipt log plus the world state of every deployed contract.

    Execution is strictly serial; a reverted transaction leaves the state
    untouched but still produces a receipt and consumes the sender's nonce.
    """

    def __init__(self, schedule: GasSchedule, policy=None, cas=None, registry: dict | None = None):
        if registry is None:
            from blockmedc.contracts import KINDS as registry
        if policy is None:
            from blockmedc.grading import GradingPolicy

            policy = GradingPolicy()
        if cas is None:
            from blockmedc.cas import MemoryCas

            cas = MemoryCas()
        self.schedule = schedule
        self.policy = policy
        self.cas = cas
        self.registry = dict(registry)
        self.transactions: list[Transaction] = []
        self.receipts: list[Receipt] = []
        self._storage: dict[Address, dict] = {}
        self._contracts: dict[Address, Contract] = {}
        self._tombstones: dict[Address, Tombstone] = {}
        self._nonces: dict[Address, int] = {}
        self._last_ts = 0
        self._lock = threading.RLock()
        self._meter: GasMeter | None = None
        self._journal: list | None = None
        self._events: list[Event] = []
        self._creations: list = []

    # ---- public surface -------------------------------------------------

    def nonce(self, account: Address) -> int:
        return self._nonces.get(account, 0)

    @property
    def last_timestamp(self) -> int:
        return self._last_ts

    def contract(self, address: Address) -> Contract:
        try:
            return self._contracts[address]
        except KeyError:
            raise UnknownContract(address.hex) from None

    def contracts(self, kind: str | None = None) -> list[Address]:
        return [a for a, c in self._contracts.items() if kind is None or c.kind == kind]

    def tombstone(self, address: Address) -> Tombstone | None:
        return self._tombstones.get(address)

    def _next_ts(self, timestamp: int | None) -> int:
        return self._last_ts + 1 if timestamp is None else timestamp

    def deploy_contract(self, sender: Address, kind: str, ctor_args: Iterable = (), timestamp: int | None = None):
        tx = Transaction(sender, DEPLOY, kind, tuple(ctor_args), self._next_ts(timestamp), self.nonce(sender))
        receipt = self.submit(tx)
        return receipt.created_contract, receipt

    def transact(self, sender: Address, target: Address, operation: str, *args, timestamp: int | None = None, **kwargs) -> Receipt:
        """Build a correctly-nonced transaction (named args allowed) and submit it."""
        cls = type(self.contract(target))
        fn = getattr(cls, operation, None)
        if entry_kind(cls, operation) is None:
            raise UnknownOperation(f"{cls.kind}.{operation}")
        positional = _bind(fn, args, kwargs)
        tx = Transaction(sender, target, operation, positional, self._next_ts(timestamp), self.nonce(sender))
        return self.submit(tx)

    def view(self, target: Address, method: str, *args, now: int | None = None, **kwargs):
        """Run a read-only method outside any transaction (no gas, no receipt)."""
        with self._lock:
            contract = self._resolve(target)
            cls = type(contract)
            if entry_kind(cls, method) != "view":
                raise UnknownOperation(f"{cls.kind}.{method} is not a view")
            fn = getattr(contract, method)
            positional = _bind(getattr(cls, method), args, kwargs)
            ctx = Context(self, target, target, self._last_ts if now is None else now)
            return fn(ctx, *positional)

    def submit(self, tx: Transaction) -> Receipt:
        with self._lock:
            if tx.nonce != self.nonce(tx.sender):
                raise BadNonce(f"expected nonce {self.nonce(tx.sender)}, got {tx.nonce}")
            if tx.timestamp < self._last_ts:
                raise BadTimestamp(f"timestamp {tx.timestamp} precedes {self._last_ts}")
            if tx.target == DEPLOY:
                cls = self._kind_class(tx.operation)
                _bind(cls.constructor, tx.args)
            else:
                contract = self._resolve(tx.target)
                if entry_kind(type(contract), tx.operation) != "external":
                    raise UnknownOperation(f"{contract.kind}.{tx.operation}")
                _bind(getattr(type(contract), tx.operation), tx.args)
            return self._execute(tx)

    def query_events(self, contract: Address | None = None, name: str | None = None, range: tuple[int, int] | None = None) -> list[Event]:
        with self._lock:
            out = []
            for r in self.receipts:
                for e in r.events:
                    if contract is not None and e.contract != contract:
                        continue
                    if name is not None and e.name != name:
                        continue
                    if range is not None and not (range[0] <= e.date <= range[1]):
                        continue
                    out.append(e)
            return out

    def export_records(self) -> list[dict]:
        with self._lock:
            return [r.to_json() for r in self.receipts]

    def export_ledger(self) -> bytes:
        lines = [json.dumps(rec, separators=(",", ":"), ensure_ascii=False) + "\n" for rec in self.export_records()]
        return "".join(lines).encode("utf-8")

    def state_hash(self) -> bytes:
        with self._lock:
            snapshot = (
                {a: dict(s) for a, s in self._storage.items()},
                {a: c.kind for a, c in self._contracts.items()},
                dict(self._tombstones),
                dict(self._nonces),
            )
            return digest(encode(snapshot))

    @classmethod
    def replay(cls, transactions: Iterable[Transaction], schedule: GasSchedule, policy=None, cas=None) -> Ledger:
        ledger = cls(schedule, policy=policy, cas=cas)
        for tx in transactions:
            ledger.submit(tx)
        return ledger

    # ---- execution ------------------------------------------------------

    def _kind_class(self, kind: str) -> type:
        try:
            return self.registry[kind]
        except KeyError:
            raise UnknownKind(kind) from None

    def _resolve(self, target: Address) -> Contract:
        contract = self.contract(target)
        if target in self._tombstones:
            raise ContractDestroyed(target.hex)
        return contract

    def _execute(self, tx: Transaction) -> Receipt:
        meter = GasMeter(self.schedule, arg_words=words(tuple(tx.args)))
        self._meter, self._journal, self._events, self._creations = meter, [], [], []
        created = None
        ret = None
        reason = None
        try:
            if tx.target == DEPLOY:
                ctx = Context(self, tx.sender, tx.sender, tx.timestamp)
                created = self._create(ctx, tx.sender, tx.operation, tx.args)
                ret = created
            else:
                contract = self._contracts[tx.target]
                ctx = Context(self, tx.sender, tx.target, tx.timestamp)
                ret = getattr(contract, tx.operation)(ctx, *tx.args)
        except Revert as exc:
            self._rollback()
            reason = exc.reason
            created = None
        except BaseException:
            self._rollback()
            self._meter = self._journal = None
            raise
        events = tuple(self._events) if reason is None else ()
        creations = tuple(self._creations) if reason is None else ()
        receipt = Receipt(
            tx_hash=tx.hash,
            status="Success" if reason is None else "Reverted",
            revert_reason=reason,
            gas_used=meter.used,
            events=events,
            created_contract=created,
            return_value=ret if reason is None else None,
            creations=creations,
            counters=meter.counters(),
        )
        self._meter = self._journal = None
        self._events, self._creations = [], []
        self._nonces[tx.sender] = self.nonce(tx.sender) + 1
        self._last_ts = tx.timestamp
        self.transactions.append(tx)
        self.receipts.append(receipt)
        return receipt

    def _rollback(self) -> None:
        for undo in reversed(self._journal or []):
            undo()
        self._journal = []
        self._events = []

    def _read(self, address: Address, key):
        value = self._storage.get(address, {}).get(key, _MISSING)
        if self._meter is not None:
            self._meter.reads += 1 if value is _MISSING else words(value)
        return value

    def _write(self, address: Address, key, value) -> None:
        if self._journal is None:
            raise RuntimeError("state writes are only allowed inside a transaction")
        store = self._storage.setdefault(address, {})
        old = store.get(key, _MISSING)

        def undo(store=store, key=key, old=old):
            if old is _MISSING:
                store.pop(key, None)
            else:
                store[key] = old

        self._journal.append(undo)
        if value is _MISSING:
            store.pop(key, None)
            self._meter.writes += 1
        else:
            store[key] = value
            self._meter.writes += words(value)

    def _emit(self, event: Event) -> None:
        if self._journal is None:
            raise RuntimeError("events can only be emitted inside a transaction")
        self._meter.events += 1
        self._events.append(event)

    def _bump_nonce(self, address: Address) -> int:
        n = self.nonce(address)
        self._nonces[address] = n + 1

        def undo(address=address, n=n):
            if n == 0:
                self._nonces.pop(address, None)
            else:
                self._nonces[address] = n

        self._journal.append(undo)
        return n

    def _create(self, ctx: Context, creator: Address, kind: str, ctor_args: tuple) -> Address:
        cls = self._kind_class(kind)
        args = _bind(cls.constructor, tuple(ctor_args))
        before = self._meter.used
        # top-level deploys consume the sender's nonce outside the journal
        n = self.nonce(creator) if creator == ctx.sender and ctx.contract == ctx.sender else self._bump_nonce(creator)
        address = trunc20(digest(creator.raw + u64(n)))
        if address in self._contracts:
            raise Revert("AddressCollision")
        contract = cls(self, address)
        self._contracts[address] = contract
        self._journal.append(lambda: self._contracts.pop(address, None))
        self._meter.deploys += 1
        self._meter.code_words += cls.code_words
        contract.constructor(Context(self, ctx.sender if creator == ctx.sender else creator, address, ctx.now), *args)
        self._creations.append((address, kind, self._meter.used - before))
        return address

    def _internal_call(self, ctx: Context, target: Address, method: str, args: tuple, kwargs: dict):
        contract = self._contracts.get(target)
        if contract is None:
            raise Revert("UnknownContract")
        if target in self._tombstones:
            raise Revert("ContractDestroyed")
        cls = type(contract)
        if entry_kind(cls, method) is None:
            raise Revert("UnknownOperation")
        positional = _bind(getattr(cls, method), args, kwargs)
        if self._meter is not None:
            self._meter.reads += 1
        sub = Context(self, ctx.contract, target, ctx.now)
        return getattr(contract, method)(sub, *positional)

    def _kind_of(self, address: Address) -> str | None:
        if self._meter is not None:
            self._meter.reads += 1
        c = self._contracts.get(address)
        return c.kind if c else None

    def _is_destroyed(self, address: Address) -> bool:
        if self._meter is not None:
            self._meter.reads += 1
        return address in self._tombstones

    def _destroy(self, address: Address, by: Address, now: int) -> None:
        if self._journal is None:
            raise RuntimeError("destroy outside a transaction")
        self._tombstones[address] = Tombstone(now, by)
        self._journal.append(lambda: self._tombstones.pop(address, None))
        self._meter.writes += 1
