"""JSON Lines scenario runner.

One command per line::

    {"op": "deploy", "sender": "ump", "args": {"kind": "University", "ctor": ["@authority"]}, "as": "uni"}
    {"op": "add_institution", "sender": "ump", "target": "@uni",
     "args": {"institution": "@fpn_inst", "head": "fpn", "vice_head": "vice"},
     "expect": {"status": "Success", "eventCount": 1}}

``sender`` is an actor alias.  Inside ``args`` and ``target`` a string
``"@name"`` resolves to a bound value (``as``) or else to an actor address;
``"@pk:alias"`` is the actor's public key, ``"@doc:name"`` and
``"@digest:name"`` are the document and payload digest of a bound certificate
instance, ``"0x..."`` of even length is raw bytes and ``"utf8:..."`` encodes
text.  ``sign_payload`` fills in the sender's key and signature when they are
omitted.  Blank lines and objects holding only ``note`` are skipped.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from blockmedc.config import Config
from blockmedc.crypto import Address, KeyPair, generate_account, sign
from blockmedc.encoding import render
from blockmedc.errors import BlockMedcError, LedgerError, Revert
from blockmedc.ledger import Ledger, Receipt, entry_kind
from blockmedc.verification import verify_by_id, verify_document

log = logging.getLogger(__name__)

VERIFY_OPS = ("verify_document", "verify_by_id")
KNOWN_KEYS = {"op", "sender", "target", "args", "at", "expect", "as", "note"}


class ParseError(BlockMedcError):
    pass


class ExpectationFailed(BlockMedcError):
    pass


@dataclass
class Command:
    line: int
    op: str
    sender: str | None = None
    target: str | None = None
    args: dict | list = field(default_factory=dict)
    at: int | str | None = None
    expect: dict | None = None
    bind: str | None = None


def parse_scenario(text: str) -> list[Command]:
    out = []
    for n, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {n}: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise ParseError(f"line {n}: command must be an object")
        if set(obj) == {"note"}:
            continue
        unknown = set(obj) - KNOWN_KEYS
        if unknown:
            raise ParseError(f"line {n}: unknown keys {sorted(unknown)}")
        if not isinstance(obj.get("op"), str):
            raise ParseError(f"line {n}: missing op")
        args = obj.get("args", {})
        if not isinstance(args, (dict, list)):
            raise ParseError(f"line {n}: args must be an object or array")
        out.append(Command(n, obj["op"], obj.get("sender"), obj.get("target"), args, obj.get("at"), obj.get("expect"), obj.get("as")))
    return out


def load_scenario(path: str | Path) -> list[Command]:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


@dataclass
class Outcome:
    command: Command
    status: str  # Success | Reverted | Rejected
    reason: str | None = None
    receipt: Receipt | None = None
    value: object = None

    @property
    def event_count(self) -> int:
        return len(self.receipt.events) if self.receipt else 0


def _subset(expected, actual) -> bool:
    if isinstance(expected, dict):
        return isinstance(actual, dict) and all(k in actual and _subset(v, actual[k]) for k, v in expected.items())
    return expected == actual


class Runner:
    def __init__(self, config: Config, seed: bytes = b"", cas=None):
        self.seed = seed
        self.ledger = Ledger(config.gas, config.policy, cas=cas)
        self.accounts: dict[str, tuple[Address, KeyPair]] = {}
        self.bindings: dict[str, object] = {}
        self.outcomes: list[Outcome] = []
        self.failures: list[str] = []

    # -- resolution -------------------------------------------------------

    def account(self, alias: str) -> tuple[Address, KeyPair]:
        if alias not in self.accounts:
            self.accounts[alias] = generate_account(alias.encode("utf-8") + self.seed)
        return self.accounts[alias]

    def address(self, alias: str) -> Address:
        return self.account(alias)[0]

    def resolve(self, value):
        if isinstance(value, list):
            return [self.resolve(v) for v in value]
        if isinstance(value, dict):
            return {k: self.resolve(v) for k, v in value.items()}
        if not isinstance(value, str):
            return value
        if value.startswith("@pk:"):
            return self.account(value[4:])[1].public_key
        if value.startswith("@doc:"):
            return self.ledger.view(self._bound(value[5:]), "document")
        if value.startswith("@digest:"):
            return self.ledger.view(self._bound(value[8:]), "payload_digest")
        if value.startswith("@"):
            name = value[1:]
            return self.bindings[name] if name in self.bindings else self.address(name)
        if value.startswith("utf8:"):
            return value[5:].encode("utf-8")
        if value.startswith("0x") and len(value) % 2 == 0 and len(value) > 2:
            try:
                raw = bytes.fromhex(value[2:])
            except ValueError:
                return value
            return Address(raw) if len(raw) == 20 else raw
        return value

    def _bound(self, name: str):
        try:
            return self.bindings[name]
        except KeyError:
            raise ParseError(f"unbound name {name!r}") from None

    def _timestamp(self, at) -> int | None:
        if at is None:
            return None
        if isinstance(at, str) and at.startswith("+"):
            return self.ledger.last_timestamp + int(at[1:])
        return int(at)

    # -- execution --------------------------------------------------------

    def execute(self, cmd: Command) -> Outcome:
        try:
            outcome = self._dispatch(cmd)
        except Revert as exc:
            outcome = Outcome(cmd, "Reverted", exc.reason)
        except LedgerError as exc:
            outcome = Outcome(cmd, "Rejected", type(exc).__name__)
        except BlockMedcError as exc:
            if isinstance(exc, ParseError):
                raise
            outcome = Outcome(cmd, "Rejected", type(exc).__name__)
        if cmd.bind and outcome.status == "Success":
            self.bindings[cmd.bind] = outcome.value
        self.outcomes.append(outcome)
        self._check(outcome)
        return outcome

    def _dispatch(self, cmd: Command) -> Outcome:
        args = self.resolve(cmd.args)
        if cmd.op in VERIFY_OPS:
            return self._verify(cmd, args)
        if cmd.sender is None:
            target = self.resolve(cmd.target)
            value = self._call_view(target, cmd.op, args)
            return Outcome(cmd, "Success", value=value)
        sender = self.address(cmd.sender)
        ts = self._timestamp(cmd.at)
        if cmd.op == "deploy":
            addr, receipt = self.ledger.deploy_contract(sender, args["kind"], args.get("ctor", ()), timestamp=ts)
            return self._from_receipt(cmd, receipt, addr)
        target = self.resolve(cmd.target)
        if not isinstance(target, Address):
            raise ParseError(f"line {cmd.line}: target does not resolve to an address")
        kind = entry_kind(type(self.ledger.contract(target)), cmd.op)
        if kind == "view":
            return Outcome(cmd, "Success", value=self._call_view(target, cmd.op, args))
        if cmd.op == "sign_payload" and isinstance(args, dict):
            kp = self.account(cmd.sender)[1]
            args.setdefault("public_key", kp.public_key)
            if "signature" not in args:
                args["signature"] = sign(kp, self.ledger.view(target, "payload_digest"))
        if isinstance(args, dict):
            receipt = self.ledger.transact(sender, target, cmd.op, timestamp=ts, **args)
        else:
            receipt = self.ledger.transact(sender, target, cmd.op, *args, timestamp=ts)
        return self._from_receipt(cmd, receipt, receipt.return_value)

    def _call_view(self, target, method, args):
        if isinstance(args, dict):
            return self.ledger.view(target, method, **args)
        return self.ledger.view(target, method, *args)

    def _from_receipt(self, cmd: Command, receipt: Receipt, value) -> Outcome:
        if receipt.ok:
            return Outcome(cmd, "Success", receipt=receipt, value=value)
        return Outcome(cmd, "Reverted", receipt.revert_reason, receipt=receipt)

    def _verify(self, cmd: Command, args: dict) -> Outcome:
        if cmd.op == "verify_document":
            res = verify_document(self.ledger, args["document"], args["subject"], args["kind"])
            return Outcome(cmd, "Success", value=res)
        summary = verify_by_id(self.ledger, self.ledger.cas, args["subject"], args["kind"])
        return Outcome(cmd, "Success", value=summary)

    # -- expectations -----------------------------------------------------

    def _check(self, o: Outcome) -> None:
        exp = o.command.expect
        if exp is None:
            # a bare command that reverts is a scenario bug, not a silent no-op
            if o.status != "Success":
                self.failures.append(f"line {o.command.line}: {o.command.op} {o.status}: {o.reason}")
            return
        problems = []
        if "status" in exp and exp["status"] != o.status:
            problems.append(f"status {o.status!r} != {exp['status']!r} ({o.reason})")
        if "revertReason" in exp and exp["revertReason"] != o.reason:
            problems.append(f"reason {o.reason!r} != {exp['revertReason']!r}")
        if "eventCount" in exp and exp["eventCount"] != o.event_count:
            problems.append(f"eventCount {o.event_count} != {exp['eventCount']}")
        if "result" in exp or "count" in exp:
            rendered = _render_value(o.value)
            if "result" in exp and not _subset(_render_value(self.resolve(exp["result"])), rendered):
                problems.append(f"result {rendered!r} does not match {exp['result']!r}")
            if "count" in exp:
                seq = rendered.get("items") if isinstance(rendered, dict) else rendered
                n = len(seq) if isinstance(seq, list) else None
                if n != exp["count"]:
                    problems.append(f"count {n} != {exp['count']}")
        for p in problems:
            self.failures.append(f"line {o.command.line}: {o.command.op}: {p}")

    def run(self, commands: list[Command]) -> list[Outcome]:
        for cmd in commands:
            o = self.execute(cmd)
            log.debug("line %d %s -> %s %s", cmd.line, cmd.op, o.status, o.reason or "")
        return self.outcomes


def _render_value(value):
    if hasattr(value, "to_json") and not isinstance(value, type):
        return value.to_json()
    try:
        return render(value)
    except TypeError:
        return repr(value)


def run_scenario(commands: list[Command], config: Config, seed: bytes = b"", cas=None) -> Runner:
    runner = Runner(config, seed, cas)
    runner.run(commands)
    return runner
